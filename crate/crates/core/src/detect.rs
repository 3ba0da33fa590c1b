//! Plate candidate scoring, verification and the strict/permissive mode
//! machine that widens the aspect-ratio window after repeated misses.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::{
    binarize, components, edge_density, vertical_projection_peaks, BinarizeMethod, GrayRaster,
    Region,
};

/// Aspect ratio that scores 1.0.
pub const IDEAL_ASPECT: f64 = 2.5;
/// Area fraction at which the area score saturates.
pub const AREA_SATURATION: f64 = 0.02;
/// Edge density that scores 1.0.
pub const TYPICAL_EDGE_DENSITY: f64 = 0.12;
pub const EDGE_DENSITY_RANGE: (f64, f64) = (0.01, 0.82);
pub const MIN_PEAKS: usize = 2;
/// Consecutive misses before switching to permissive bounds.
pub const MISSES_TO_PERMISSIVE: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub region: Region,
    /// Width over height of the bounding box.
    pub ar: f64,
    /// Bounding-box area over image area.
    pub area_frac: f64,
    pub edge_density: f64,
    pub source_method: BinarizeMethod,
}

impl Candidate {
    pub fn from_region(region: Region, img: &GrayRaster, method: BinarizeMethod) -> Self {
        let b = region.bbox;
        let img_area = (img.width() * img.height()).max(1) as f64;
        Candidate {
            ar: b.w as f64 / b.h.max(1) as f64,
            area_frac: (b.area() as f64 / img_area).min(1.0),
            edge_density: edge_density(img, b),
            source_method: method,
            region,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Strict,
    Permissive,
}

impl Mode {
    pub fn aspect_bounds(self) -> (f64, f64) {
        match self {
            Mode::Strict => (1.1, 6.0),
            Mode::Permissive => (0.7, 8.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorMode {
    pub mode: Mode,
    pub consecutive_misses: u32,
}

impl Default for DetectorMode {
    fn default() -> Self {
        DetectorMode {
            mode: Mode::Strict,
            consecutive_misses: 0,
        }
    }
}

/// A hit resets to strict; the eighth consecutive miss switches to permissive.
pub fn advance_mode(m: DetectorMode, detected: bool) -> DetectorMode {
    if detected {
        return DetectorMode::default();
    }
    let misses = m.consecutive_misses.saturating_add(1);
    DetectorMode {
        mode: if misses >= MISSES_TO_PERMISSIVE {
            Mode::Permissive
        } else {
            m.mode
        },
        consecutive_misses: misses,
    }
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn aspect_score(ar: f64) -> f64 {
    clip01(1.0 - (ar - IDEAL_ASPECT).abs() / IDEAL_ASPECT)
}

pub fn area_score(area_frac: f64) -> f64 {
    clip01(area_frac / AREA_SATURATION)
}

pub fn density_score(rho: f64) -> f64 {
    clip01(1.0 - (rho - TYPICAL_EDGE_DENSITY).abs() / TYPICAL_EDGE_DENSITY)
}

/// Composite `0.5 s_ar + 0.3 s_area + 0.2 s_rho`.
pub fn score(c: &Candidate) -> f64 {
    0.5 * aspect_score(c.ar) + 0.3 * area_score(c.area_frac) + 0.2 * density_score(c.edge_density)
}

pub fn verify(c: &Candidate, peaks: usize, mode: Mode) -> bool {
    let (lo, hi) = mode.aspect_bounds();
    (EDGE_DENSITY_RANGE.0..=EDGE_DENSITY_RANGE.1).contains(&c.edge_density)
        && peaks >= MIN_PEAKS
        && (lo..=hi).contains(&c.ar)
}

/// Best verified candidate; ties go to the larger area, then the upper-left
/// box. `peaks[i]` belongs to `candidates[i]`.
pub fn select<'a>(candidates: &'a [Candidate], peaks: &[usize], mode: DetectorMode) -> Option<&'a Candidate> {
    candidates
        .iter()
        .zip(peaks)
        .filter(|(c, &p)| verify(c, p, mode.mode))
        .map(|(c, _)| c)
        .min_by(|a, b| {
            score(b)
                .total_cmp(&score(a))
                .then(b.region.area.cmp(&a.region.area))
                .then((a.region.bbox.y, a.region.bbox.x).cmp(&(b.region.bbox.y, b.region.bbox.x)))
        })
}

/// Runs the four binarizers over `img`, turns every sizeable component (of
/// the mask and of its complement) into a candidate, and selects the best
/// verified one. Peaks are counted on the Otsu mask of each candidate crop.
pub fn detect_plate(img: &GrayRaster, mode: DetectorMode) -> Result<Option<Candidate>> {
    img.ensure_non_empty()?;
    let min_area = (img.width() * img.height()) / 1000;
    let mut cands = Vec::new();
    let mut peaks = Vec::new();
    for method in BinarizeMethod::ALL {
        let mask = binarize(img, method)?;
        let mut regions = components(&mask);
        if method != BinarizeMethod::CANNY {
            regions.extend(components(&mask.invert()));
        }
        for r in regions.into_iter().filter(|r| r.bbox.area() > min_area.max(16)) {
            let crop = img.crop(r.bbox)?;
            let p = vertical_projection_peaks(&binarize(&crop, BinarizeMethod::OTSU)?);
            cands.push(Candidate::from_region(r, img, method));
            peaks.push(p);
        }
    }
    Ok(select(&cands, &peaks, mode).cloned())
}
