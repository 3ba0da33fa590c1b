use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frames::FrameTruth;
use super::pipeline::Toggles;
use super::Scenario;
use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::state_id::StateDecision;
use crate::track::WarningLevel;

/// Column order of the session CSV.
pub const CSV_COLUMNS: [&str; 14] = [
    "frame", "t", "D_true", "v_true", "occluded", "h_bar", "D_geo", "D_deep", "D_fused", "D_hat",
    "v_hat", "ttc", "level", "flags",
];

/// Everything the pipeline produced for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub t: f64,
    pub d_true: f64,
    pub v_true: f64,
    pub occluded: bool,
    pub h_true: f64,
    pub h_bar: Option<f64>,
    pub char_heights: Vec<f64>,
    /// Height-only pinhole distance with pose compensation.
    pub d_height: Option<f64>,
    pub d_geo: Option<f64>,
    pub d_deep: Option<f64>,
    pub d_fused: Option<f64>,
    pub d_hat: Option<f64>,
    pub v_hat: Option<f64>,
    pub ttc: Option<f64>,
    pub level: Option<WarningLevel>,
    pub scale: Option<f64>,
    pub pitch: f64,
    pub roll: f64,
    pub flags: Vec<String>,
}

impl FrameRecord {
    pub fn new(t: &FrameTruth) -> Self {
        FrameRecord {
            frame: t.frame,
            t: t.t,
            d_true: t.d_true,
            v_true: t.v_true,
            occluded: t.occluded,
            h_true: t.h_true,
            h_bar: None,
            char_heights: vec![],
            d_height: None,
            d_geo: None,
            d_deep: None,
            d_fused: None,
            d_hat: None,
            v_hat: None,
            ttc: None,
            level: None,
            scale: None,
            pitch: 0.0,
            roll: 0.0,
            flags: vec![],
        }
    }

    pub fn flag(&mut self, f: &str) {
        self.flags.push(f.to_string());
    }

    pub fn has_flag(&self, f: &str) -> bool {
        self.flags.iter().any(|x| x == f)
    }

    fn csv_row(&self) -> [String; 14] {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        [
            self.frame.to_string(),
            self.t.to_string(),
            self.d_true.to_string(),
            self.v_true.to_string(),
            (self.occluded as u8).to_string(),
            opt(self.h_bar),
            opt(self.d_geo),
            opt(self.d_deep),
            opt(self.d_fused),
            opt(self.d_hat),
            opt(self.v_hat),
            opt(self.ttc),
            self.level.map_or(String::new(), |l| l.label().to_string()),
            self.flags.join("|"),
        ]
    }
}

/// Error statistics of one distance column against truth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub frames: usize,
    pub mae_m: f64,
    /// Mean of `|D - D_true| / D_true`.
    pub mae_rel: f64,
    pub rmse_m: f64,
    /// Mean of `D / D_true - 1`.
    pub bias_rel: f64,
    /// Standard deviation of `D - D_true`.
    pub std_m: f64,
}

impl ErrorStats {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let (mut n, mut sa, mut sr, mut s2, mut sb, mut se) = (0usize, 0.0, 0.0, 0.0, 0.0, 0.0);
        let mut errs = Vec::new();
        for (d, truth) in pairs {
            let e = d - truth;
            n += 1;
            sa += e.abs();
            sr += e.abs() / truth;
            s2 += e * e;
            sb += d / truth - 1.0;
            se += e;
            errs.push(e);
        }
        if n == 0 {
            return ErrorStats::default();
        }
        let nf = n as f64;
        let mean_e = se / nf;
        ErrorStats {
            frames: n,
            mae_m: sa / nf,
            mae_rel: sr / nf,
            rmse_m: (s2 / nf).sqrt(),
            bias_rel: sb / nf,
            std_m: (errs.iter().map(|e| (e - mean_e).powi(2)).sum::<f64>() / nf).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub frames: usize,
    pub occluded_frames: usize,
    pub burn_in: usize,
    pub geo: ErrorStats,
    pub fused: ErrorStats,
    pub smoothed: ErrorStats,
    /// Fused error statistics on visible and occluded frames separately.
    pub fused_visible: ErrorStats,
    pub fused_occluded: ErrorStats,
    pub raw_std: f64,
    pub smoothed_std: f64,
    /// Fraction of frames with a fused distance.
    pub coverage: f64,
    /// Fraction of occluded frames with a fused distance.
    pub occlusion_coverage: f64,
    pub velocity_error_std: f64,
}

/// Per-frame records of one run plus the settings that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionLog {
    pub scenario: Scenario,
    pub toggles: Toggles,
    pub camera: CameraModel,
    pub decision: StateDecision,
    pub ranging_state: String,
    pub ranging_height_m: f64,
    pub records: Vec<FrameRecord>,
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'static str,
    rng: &'static str,
    scenario: &'a Scenario,
    toggles: Toggles,
    camera: CameraModel,
    decision: &'a StateDecision,
    ranging_state: &'a str,
    ranging_height_m: f64,
    summary: Summary,
}

impl SessionLog {
    pub fn summary(&self) -> Summary {
        self.summary_after(0)
    }

    /// Statistics over frames from `burn_in` on.
    pub fn summary_after(&self, burn_in: usize) -> Summary {
        let recs: Vec<&FrameRecord> = self.records.iter().skip(burn_in).collect();
        let col = |get: fn(&FrameRecord) -> Option<f64>, keep: &dyn Fn(&FrameRecord) -> bool| {
            ErrorStats::from_pairs(recs.iter().filter(|r| keep(r)).filter_map(|r| get(r).map(|d| (d, r.d_true))))
        };
        let all = |_: &FrameRecord| true;
        let geo = col(|r| r.d_geo, &all);
        let fused = col(|r| r.d_fused, &all);
        let smoothed = col(|r| r.d_hat, &all);
        let occluded: Vec<_> = recs.iter().filter(|r| r.occluded).collect();
        let verr: Vec<f64> = recs.iter().filter_map(|r| r.v_hat.map(|v| v - r.v_true)).collect();
        let n = recs.len().max(1) as f64;
        Summary {
            frames: recs.len(),
            occluded_frames: occluded.len(),
            burn_in,
            geo,
            fused,
            smoothed,
            fused_visible: col(|r| r.d_fused, &|r: &FrameRecord| !r.occluded),
            fused_occluded: col(|r| r.d_fused, &|r: &FrameRecord| r.occluded),
            raw_std: geo.std_m,
            smoothed_std: smoothed.std_m,
            coverage: recs.iter().filter(|r| r.d_fused.is_some()).count() as f64 / n,
            occlusion_coverage: if occluded.is_empty() {
                1.0
            } else {
                occluded.iter().filter(|r| r.d_fused.is_some()).count() as f64 / occluded.len() as f64
            },
            velocity_error_std: std_dev(&verr),
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_rows(&mut w)?;
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_rows(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn write_rows<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(CSV_COLUMNS)?;
        for r in &self.records {
            w.write_record(r.csv_row())?;
        }
        Ok(())
    }

    pub fn meta_json(&self) -> Result<String> {
        let meta = Meta {
            version: env!("CARGO_PKG_VERSION"),
            rng: "ChaCha8 (rand_chacha), stream 2k truth, 2k+1 rendering",
            scenario: &self.scenario,
            toggles: self.toggles,
            camera: self.camera,
            decision: &self.decision,
            ranging_state: &self.ranging_state,
            ranging_height_m: self.ranging_height_m,
            summary: self.summary(),
        };
        Ok(serde_json::to_string_pretty(&meta)?)
    }

    pub fn write_meta(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.meta_json()?).map_err(|e| Error::io(path, e))
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_stats_by_hand() {
        let s = ErrorStats::from_pairs([(11.0, 10.0), (9.0, 10.0), (10.5, 10.0)]);
        assert_eq!(s.frames, 3);
        assert!((s.mae_m - 2.5 / 3.0).abs() < 1e-12);
        assert!((s.mae_rel - 0.25 / 3.0).abs() < 1e-12);
        assert!((s.rmse_m - (2.25f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.bias_rel - 0.05 / 3.0).abs() < 1e-12);
        // errors 1, -1, 0.5 about their mean 1/6
        let m = 0.5 / 3.0;
        let var = ((1.0 - m) * (1.0f64 - m) + (-1.0 - m) * (-1.0 - m) + (0.5 - m) * (0.5 - m)) / 3.0;
        assert!((s.std_m - var.sqrt()).abs() < 1e-12);
        assert_eq!(ErrorStats::from_pairs(std::iter::empty()), ErrorStats::default());
    }

    #[test]
    fn csv_row_formatting() {
        let truth = FrameTruth {
            frame: 3,
            t: 0.12,
            d_true: 10.0,
            v_true: 0.0,
            occluded: true,
            h_true: 28.5,
            d_plate: 14.0,
            pitch: 0.0,
            roll: 0.0,
        };
        let mut r = FrameRecord::new(&truth);
        r.d_fused = Some(10.25);
        r.level = Some(WarningLevel::Safe);
        r.flag("occluded");
        r.flag("scale_hold");
        assert_eq!(
            r.csv_row().join(","),
            "3,0.12,10,0,1,,,,10.25,,,,safe,occluded|scale_hold"
        );
    }
}
