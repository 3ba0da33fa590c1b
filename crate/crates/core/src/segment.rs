//! Character segmentation on a rectified plate crop and the three
//! typographic measurements taken from it: mean character height, stroke
//! width and character pitch.

use serde::{Deserialize, Serialize};

use crate::camera::median;
use crate::error::{Error, Result};
use crate::raster::{
    binarize, components, distance_transform, morph, otsu_threshold, resize_bicubic, BBox,
    BinarizeMethod, BinaryRaster, GrayRaster, MorphOp,
};

/// Plates shorter than this are upscaled before thresholding.
pub const MIN_WORKING_HEIGHT: f64 = 100.0;
pub const MIN_UPSCALE: f64 = 2.0;
pub const MIN_CHARACTERS: usize = 3;

/// The two thresholding branches run on every plate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegMethod {
    AdaptiveGaussian,
    Otsu,
}

impl SegMethod {
    pub fn binarizer(self) -> BinarizeMethod {
        match self {
            SegMethod::AdaptiveGaussian => BinarizeMethod::ADAPTIVE,
            SegMethod::Otsu => BinarizeMethod::OTSU,
        }
    }
}

/// Surviving characters, left to right.
///
/// `boxes` are in working (possibly upscaled) pixels; `heights`, `widths`
/// and `gaps` are in original plate pixels. `gaps` holds the n-1
/// centre-to-centre distances of adjacent boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharSet {
    pub boxes: Vec<BBox>,
    pub heights: Vec<f64>,
    pub widths: Vec<f64>,
    pub gaps: Vec<f64>,
    pub n: usize,
    pub method: SegMethod,
    pub upscale: f64,
}

/// A segmentation plus the working-resolution masks it came from.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub chars: CharSet,
    /// Cleaned mask of the winning branch.
    pub mask: BinaryRaster,
    /// Cleaned Otsu mask; stroke width is measured here because the local
    /// threshold hollows strokes wider than its window.
    pub otsu_mask: BinaryRaster,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SegmentOptions {
    /// Overrides the automatic upscale factor (must be >= 1).
    pub upscale: Option<f64>,
    /// Report bounding-box heights instead of coverage-refined heights.
    pub bbox_heights: bool,
}

pub fn upscale_factor(plate_height: usize) -> f64 {
    let h = plate_height as f64;
    if h < MIN_WORKING_HEIGHT {
        MIN_UPSCALE.max(MIN_WORKING_HEIGHT / h)
    } else {
        1.0
    }
}

pub fn segment_characters(plate: &GrayRaster) -> Result<CharSet> {
    Ok(segment_plate(plate, SegmentOptions::default())?.chars)
}

pub fn segment_plate(plate: &GrayRaster, opts: SegmentOptions) -> Result<Segmentation> {
    plate.ensure_non_empty()?;
    let s = opts.upscale.unwrap_or_else(|| upscale_factor(plate.height()));
    let working = resize_bicubic(plate, s)?;
    let levels = ink_levels(plate);
    let mut branches = Vec::with_capacity(2);
    for method in [SegMethod::AdaptiveGaussian, SegMethod::Otsu] {
        let raw = binarize(&working, method.binarizer())?;
        let mask = morph(&morph(&raw, MorphOp::Open), MorphOp::Close);
        let boxes = filter_boxes(&mask, working.height());
        let heights = if opts.bbox_heights {
            boxes.iter().map(|b| b.h as f64 / s).collect()
        } else {
            refine_heights(plate, &boxes, s, levels)
        };
        let keep = reject_outliers(&heights);
        let mut chars: Vec<(BBox, f64)> = boxes
            .into_iter()
            .zip(heights)
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(bh, _)| bh)
            .collect();
        chars.sort_by_key(|(b, _)| (b.x, b.y));
        branches.push((method, mask, chars));
    }
    let (otsu_branch, adaptive_branch) = (branches.pop().unwrap(), branches.pop().unwrap());
    let survivors = adaptive_branch.2.len().max(otsu_branch.2.len());
    if survivors < MIN_CHARACTERS {
        return Err(Error::SegmentationFailure { survivors });
    }
    let otsu_mask = otsu_branch.1.clone();
    // equal counts go to the local threshold
    let (method, mask, chars) = if otsu_branch.2.len() > adaptive_branch.2.len() {
        otsu_branch
    } else {
        adaptive_branch
    };
    let boxes: Vec<BBox> = chars.iter().map(|(b, _)| *b).collect();
    let centres: Vec<f64> = boxes.iter().map(|b| b.center_x() / s).collect();
    Ok(Segmentation {
        chars: CharSet {
            heights: chars.iter().map(|(_, h)| *h).collect(),
            widths: boxes.iter().map(|b| b.w as f64 / s).collect(),
            gaps: centres.windows(2).map(|w| w[1] - w[0]).collect(),
            n: boxes.len(),
            boxes,
            method,
            upscale: s,
        },
        mask,
        otsu_mask,
    })
}

/// Component boxes passing the five geometric filters, evaluated in working
/// pixels against the working plate height `hp`.
fn filter_boxes(mask: &BinaryRaster, hp: usize) -> Vec<BBox> {
    let hp = hp as f64;
    components(mask)
        .into_iter()
        .map(|r| r.bbox)
        .filter(|b| {
            let (w, h) = (b.w as f64, b.h as f64);
            let cy = b.center_y();
            (0.2 * hp..=0.8 * hp).contains(&h)
                && w < 1.8 * h
                && (0.15..=1.5).contains(&(w / h))
                && b.h >= 5
                && b.w >= 2
                && (0.1 * hp..=0.9 * hp).contains(&cy)
        })
        .collect()
}

/// Single-pass rejection of heights more than two population standard
/// deviations from the mean.
fn reject_outliers(heights: &[f64]) -> Vec<bool> {
    if heights.is_empty() {
        return vec![];
    }
    let n = heights.len() as f64;
    let mean = heights.iter().sum::<f64>() / n;
    let sd = (heights.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n).sqrt();
    heights.iter().map(|h| (h - mean).abs() <= 2.0 * sd).collect()
}

/// Ink and paper intensities: medians of the two Otsu classes.
fn ink_levels(plate: &GrayRaster) -> Option<(f64, f64)> {
    let t = otsu_threshold(plate)?;
    let (mut dark, mut light) = (Vec::new(), Vec::new());
    for &v in plate.data() {
        if v <= t {
            dark.push(v as f64);
        } else {
            light.push(v as f64);
        }
    }
    if dark.is_empty() || light.is_empty() {
        return None;
    }
    let (fg, bg) = (median(dark), median(light));
    (bg - fg >= 1.0).then_some((fg, bg))
}

/// Sub-pixel character heights measured on the original plate. Each row of
/// a box (plus one margin row above and below) contributes its peak ink
/// coverage relative to the box's typical full-row coverage, so partially
/// covered edge rows count fractionally.
fn refine_heights(
    plate: &GrayRaster,
    boxes: &[BBox],
    s: f64,
    levels: Option<(f64, f64)>,
) -> Vec<f64> {
    let Some((fg, bg)) = levels else {
        return boxes.iter().map(|b| b.h as f64 / s).collect();
    };
    let (pw, ph) = (plate.width() as isize, plate.height() as isize);
    boxes
        .iter()
        .map(|b| {
            let x0 = ((b.x as f64 / s).floor() as isize).clamp(0, pw);
            let x1 = (((b.x + b.w) as f64 / s).ceil() as isize).clamp(0, pw);
            let y0 = (b.y as f64 / s).floor() as isize;
            let y1 = ((b.y + b.h) as f64 / s).ceil() as isize;
            let rows: Vec<(isize, f64)> = (y0 - 1..=y1)
                .filter(|&r| r >= 0 && r < ph)
                .map(|r| {
                    let peak = (x0..x1)
                        .map(|c| {
                            let v = plate.get(c as usize, r as usize) as f64;
                            ((bg - v) / (bg - fg)).max(0.0)
                        })
                        .fold(0.0, f64::max);
                    (r, peak)
                })
                .collect();
            let inner: Vec<f64> = rows
                .iter()
                .filter(|(r, _)| *r >= y0 && *r < y1)
                .map(|&(_, p)| p)
                .collect();
            if inner.is_empty() {
                return b.h as f64 / s;
            }
            let full = median(inner);
            if full <= 0.0 {
                return b.h as f64 / s;
            }
            rows.iter().map(|&(_, p)| (p / full).min(1.0)).sum()
        })
        .collect()
}

/// Arithmetic mean of the character heights. Summed in sorted order so the
/// result does not depend on character order.
pub fn mean_height(cs: &CharSet) -> f64 {
    let mut h = cs.heights.clone();
    h.sort_by(f64::total_cmp);
    h.iter().sum::<f64>() / h.len() as f64
}

/// Twice the median distance-transform value over stroke centre-line pixels
/// (local maxima of the distance field) inside the character boxes, in
/// original plate pixels. `plate_bin` must be in the same working
/// resolution as `cs.boxes`.
pub fn stroke_width(plate_bin: &BinaryRaster, cs: &CharSet) -> Result<f64> {
    let field = distance_transform(plate_bin);
    let mut ridge = Vec::new();
    for b in &cs.boxes {
        for y in b.y..(b.y + b.h).min(plate_bin.height()) {
            for x in b.x..(b.x + b.w).min(plate_bin.width()) {
                if plate_bin.get(x, y) && field.is_ridge(x, y) {
                    ridge.push(field.get(x, y));
                }
            }
        }
    }
    if ridge.is_empty() {
        return Err(Error::Empty("no foreground inside character boxes"));
    }
    Ok(2.0 * median(ridge) / cs.upscale)
}

/// Mean centre-to-centre distance of adjacent characters.
pub fn spacing(cs: &CharSet) -> f64 {
    if cs.gaps.is_empty() {
        return 0.0;
    }
    cs.gaps.iter().sum::<f64>() / cs.gaps.len() as f64
}
