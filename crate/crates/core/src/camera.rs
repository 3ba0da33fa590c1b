//! Camera intrinsics, lens presets and focal-length calibration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_text, Error, Result};

/// Pinhole camera at a given working resolution. No distortion model: inputs
/// are assumed to be rectified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Focal length in pixels at `width_px`.
    pub f_px: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl CameraModel {
    pub fn new(f_px: f64, width_px: u32, height_px: u32) -> Result<Self> {
        let cam = CameraModel {
            f_px,
            width_px,
            height_px,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_px.is_finite() && self.f_px > 0.0) {
            return Err(Error::invalid(format!(
                "focal length must be positive, got {}",
                self.f_px
            )));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        Ok(())
    }

    /// Same camera at a different capture width; height scales by the same ratio.
    pub fn rescaled(&self, width_px: u32) -> Result<Self> {
        let f = scale_focal(self.f_px, self.width_px as f64, width_px as f64)?;
        let h = (self.height_px as f64 * width_px as f64 / self.width_px as f64).round() as u32;
        CameraModel::new(f, width_px, h.max(1))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let cam: CameraModel =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cam.validate()?;
        Ok(cam)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Datasheet focal lengths for one lens of the IMX490 module family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensPreset {
    pub name: &'static str,
    pub efl_mm: f64,
    pub fov_h_deg: f64,
    pub f_at_2880: f64,
    pub f_at_1280: f64,
}

pub const FULL_WIDTH_PX: u32 = 2880;
pub const FULL_HEIGHT_PX: u32 = 1860;
pub const WORKING_WIDTH_PX: u32 = 1280;
pub const WORKING_HEIGHT_PX: u32 = 720;

pub const LENS_PRESETS: [LensPreset; 4] = [
    LensPreset {
        name: "030H",
        efl_mm: 16.37,
        fov_h_deg: 30.0,
        f_at_2880: 5457.0,
        f_at_1280: 2425.0,
    },
    LensPreset {
        name: "040H",
        efl_mm: 11.90,
        fov_h_deg: 38.0,
        f_at_2880: 3967.0,
        f_at_1280: 1763.0,
    },
    LensPreset {
        name: "065H",
        efl_mm: 7.90,
        fov_h_deg: 65.0,
        f_at_2880: 2633.0,
        f_at_1280: 1170.0,
    },
    LensPreset {
        name: "120H",
        efl_mm: 4.49,
        fov_h_deg: 120.0,
        f_at_2880: 1497.0,
        f_at_1280: 665.0,
    },
];

impl LensPreset {
    pub fn by_name(name: &str) -> Option<&'static LensPreset> {
        LENS_PRESETS
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
    }

    /// Camera at full sensor resolution.
    pub fn full_resolution(&self) -> CameraModel {
        CameraModel {
            f_px: self.f_at_2880,
            width_px: FULL_WIDTH_PX,
            height_px: FULL_HEIGHT_PX,
        }
    }

    /// Camera at an arbitrary capture width, scaled from the full-resolution focal length.
    pub fn at_width(&self, width_px: u32) -> Result<CameraModel> {
        self.full_resolution().rescaled(width_px)
    }
}

/// Rescales a calibrated focal length to another capture width.
pub fn scale_focal(f_cal: f64, w_cal: f64, w_cap: f64) -> Result<f64> {
    for (name, v) in [("f_cal", f_cal), ("W_cal", w_cal), ("W_cap", w_cap)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(f_cal * w_cap / w_cal)
}

/// A plate of known character height observed at a known distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    /// Reference distance in meters.
    pub d_ref: f64,
    /// Mean measured character height in pixels.
    pub h_bar: f64,
    /// Physical character height in meters.
    pub h_s: f64,
}

impl CalibrationSample {
    pub fn candidate_focal(&self) -> Result<f64> {
        for (name, v) in [("D_ref", self.d_ref), ("h_bar", self.h_bar), ("H_s", self.h_s)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(self.h_bar * self.d_ref / self.h_s)
    }
}

/// Median of the per-sample focal candidates.
pub fn calibrate_focal(samples: &[CalibrationSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("calibration samples"));
    }
    let candidates = samples
        .iter()
        .map(CalibrationSample::candidate_focal)
        .collect::<Result<Vec<_>>>()?;
    Ok(median(candidates))
}

/// Median with the mean of the two central values for even lengths.
pub(crate) fn median(mut values: Vec<f64>) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Parses a whitespace-separated samples file: an optional header row
/// (`D_ref_m h_bar_px H_s_m`), then one sample per line. `#` starts a comment.
pub fn parse_calibration_samples(text: &str) -> Result<Vec<CalibrationSample>> {
    let mut samples = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !seen_content {
            seen_content = true;
            if fields.iter().any(|f| f.parse::<f64>().is_err()) {
                // header row
                if fields.len() != 3 {
                    return Err(Error::parse(line_no, "header must have three columns"));
                }
                continue;
            }
        }
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 columns, found {}", fields.len()),
            ));
        }
        let mut vals = [0.0; 3];
        for (slot, f) in vals.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("not a number: {f:?}")))?;
        }
        let sample = CalibrationSample {
            d_ref: vals[0],
            h_bar: vals[1],
            h_s: vals[2],
        };
        sample
            .candidate_focal()
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::parse(text.lines().count().max(1), "no calibration samples"));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_focal_matches_lens_table() {
        let f = scale_focal(3967.0, 2880.0, 1280.0).unwrap();
        assert!((f - 1763.1).abs() < 0.05, "{f}");
        let f = scale_focal(2633.0, 2880.0, 1280.0).unwrap();
        assert!((f - 1170.2).abs() < 0.05, "{f}");
        assert_eq!(scale_focal(1234.5, 640.0, 640.0).unwrap(), 1234.5);
    }

    #[test]
    fn scale_focal_rejects_non_positive() {
        assert!(scale_focal(0.0, 2880.0, 1280.0).is_err());
        assert!(scale_focal(100.0, -1.0, 1280.0).is_err());
        assert!(scale_focal(100.0, 2880.0, 0.0).is_err());
    }

    #[test]
    fn lens_presets_are_consistent_across_resolutions() {
        for p in LENS_PRESETS {
            let scaled = p.f_at_2880 * 1280.0 / 2880.0;
            assert!((scaled - p.f_at_1280).abs() <= 1.0, "{}", p.name);
        }
        assert_eq!(LensPreset::by_name("040h").unwrap().f_at_2880, 3967.0);
    }

    #[test]
    fn calibrate_single_sample_inverts_pinhole() {
        let f = calibrate_focal(&[CalibrationSample {
            d_ref: 1.0,
            h_bar: 285.6,
            h_s: 0.072,
        }])
        .unwrap();
        assert!((f - 3966.67).abs() < 0.01, "{f}");
    }

    #[test]
    fn calibrate_two_equal_candidates() {
        let f = calibrate_focal(&[
            CalibrationSample {
                d_ref: 2.0,
                h_bar: 142.8,
                h_s: 0.072,
            },
            CalibrationSample {
                d_ref: 1.0,
                h_bar: 285.6,
                h_s: 0.072,
            },
        ])
        .unwrap();
        assert!((f - 3966.67).abs() < 0.01, "{f}");
    }

    #[test]
    fn calibrate_median_discards_outlier() {
        // candidates are h_bar * 1 / 1
        let s = |f: f64| CalibrationSample {
            d_ref: 1.0,
            h_bar: f,
            h_s: 1.0,
        };
        assert_eq!(calibrate_focal(&[s(3900.0), s(5000.0), s(3967.0)]).unwrap(), 3967.0);
    }

    #[test]
    fn calibrate_errors() {
        assert!(calibrate_focal(&[]).is_err());
        assert!(calibrate_focal(&[CalibrationSample {
            d_ref: 1.0,
            h_bar: 0.0,
            h_s: 0.072
        }])
        .is_err());
    }

    #[test]
    fn samples_file_round_trip() {
        let text = "# plate at three distances\nD_ref_m h_bar_px H_s_m\n1.0 285.6 0.072\n2.0 142.8 0.072\n\n3.0 95.2 0.072 # far\n";
        let samples = parse_calibration_samples(text).unwrap();
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[2].h_bar, 95.2);
    }

    #[test]
    fn samples_file_reports_line_numbers() {
        match parse_calibration_samples("1.0 285.6 0.072\n2.0 abc 0.072\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_calibration_samples(""),
            Err(Error::Parse { .. })
        ));
        match parse_calibration_samples("1.0 285.6 0.072\n1.0 -2 0.072\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scale_focal_is_linear(f in 1.0f64..1e4, a in 1.0f64..1e4, b in 1.0f64..1e4, b2 in 1.0f64..1e4) {
                let lhs = scale_focal(f, a, b).unwrap() * b2 / b;
                let rhs = scale_focal(f, a, b2).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs());
            }

            #[test]
            fn calibration_median_is_robust(c in proptest::collection::vec(100.0f64..10000.0, 3), outlier in 1.0f64..1e6, which in 0usize..3, perm in 0usize..6) {
                let s = |f: f64| CalibrationSample { d_ref: 1.0, h_bar: f, h_s: 1.0 };
                let base: Vec<_> = c.iter().map(|&f| s(f)).collect();
                let m = calibrate_focal(&base).unwrap();
                let orders = [[0,1,2],[0,2,1],[1,0,2],[1,2,0],[2,0,1],[2,1,0]];
                let permuted: Vec<_> = orders[perm].iter().map(|&i| base[i]).collect();
                prop_assert_eq!(calibrate_focal(&permuted).unwrap(), m);
                // replacing one candidate keeps the median within the range of the two others
                let mut replaced = base.clone();
                replaced[which] = s(outlier);
                let m2 = calibrate_focal(&replaced).unwrap();
                let others: Vec<f64> = (0..3).filter(|&i| i != which).map(|i| c[i]).collect();
                let lo = others[0].min(others[1]);
                let hi = others[0].max(others[1]);
                prop_assert!(m2 >= lo && m2 <= hi);
            }
        }
    }
}
