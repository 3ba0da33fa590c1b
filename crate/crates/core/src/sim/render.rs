use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::GrayRaster;
use crate::typography::StateSpec;

pub const PLATE_WIDTH_M: f64 = 0.305;
pub const PLATE_HEIGHT_M: f64 = 0.152;
/// Glyph box width as a fraction of character height.
pub const GLYPH_WIDTH_FRAC: f64 = 0.4;
pub const GLYPH_COUNT: usize = 7;
/// Smallest character height the segmenter accepts, pixels.
pub const SEGMENTATION_FLOOR_PX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    pub background: f64,
    pub ink: f64,
    /// Gaussian intensity noise, gray levels.
    pub intensity_noise: f64,
    /// Gaussian per-glyph height jitter, pixels.
    pub char_height_jitter: f64,
    /// Draw small slogan blobs in the top and bottom strips.
    pub strip_text: bool,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            background: 200.0,
            ink: 40.0,
            intensity_noise: 2.0,
            char_height_jitter: 0.0,
            strip_text: true,
        }
    }
}

/// Axis-aligned box with fractional edges, pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FRect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl FRect {
    fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        FRect { x0, y0, x1, y1 }
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn center_x(&self) -> f64 {
        0.5 * (self.x0 + self.x1)
    }

    /// Area of intersection with the unit pixel at `(px, py)`.
    fn coverage(&self, px: f64, py: f64) -> f64 {
        let w = (self.x1.min(px + 1.0) - self.x0.max(px)).max(0.0);
        let h = (self.y1.min(py + 1.0) - self.y0.max(py)).max(0.0);
        w * h
    }
}

/// A rendered plate crop plus its ground truth.
#[derive(Debug, Clone)]
pub struct RenderedPlate {
    pub image: GrayRaster,
    /// Character boxes left to right, including jitter.
    pub glyphs: Vec<FRect>,
    /// Nominal (unjittered) character height, pixels.
    pub char_height_px: f64,
    pub stroke_px: f64,
    pub pitch_px: f64,
    /// Characters smaller than the segmentation floor.
    pub below_floor: bool,
}

/// Stroke layout of the block glyphs in a `w` x `h` box with horizontal
/// stroke thickness `sx` and vertical thickness `sy`. Rectangles never
/// overlap, so coverage adds exactly, and every glyph touches all four
/// sides of its box.
fn glyph_rects(kind: usize, w: f64, h: f64, sx: f64, sy: f64) -> Vec<FRect> {
    let left = FRect::new(0.0, 0.0, sx, h);
    let right = FRect::new(w - sx, 0.0, w, h);
    let top_in = FRect::new(sx, 0.0, w - sx, sy);
    let bottom_in = FRect::new(sx, h - sy, w - sx, h);
    let mid_in = FRect::new(sx, 0.5 * (h - sy), w - sx, 0.5 * (h + sy));
    match kind % GLYPH_COUNT {
        // O
        0 => vec![left, right, top_in, bottom_in],
        // 1 with a foot
        1 => vec![
            FRect::new(0.5 * (w - sx), 0.0, 0.5 * (w + sx), h - sy),
            FRect::new(0.0, h - sy, w, h),
        ],
        // E
        2 => vec![
            left,
            FRect::new(sx, 0.0, w, sy),
            FRect::new(sx, 0.5 * (h - sy), w, 0.5 * (h + sy)),
            FRect::new(sx, h - sy, w, h),
        ],
        // H
        3 => vec![left, right, mid_in],
        // U
        4 => vec![left, right, bottom_in],
        // 7
        5 => vec![FRect::new(0.0, 0.0, w, sy), FRect::new(w - sx, sy, w, h)],
        // C
        _ => vec![left, FRect::new(sx, 0.0, w, sy), FRect::new(sx, h - sy, w, h)],
    }
}

/// Renders a rectified plate of `spec` seen at distance `d` through focal
/// length `f`. Vertical sizes are foreshortened by `cos(phi) cos(psi)`.
pub fn render_plate<R: Rng + ?Sized>(
    spec: &StateSpec,
    f: f64,
    d: f64,
    pose: (f64, f64),
    params: &RenderParams,
    rng: &mut R,
) -> Result<RenderedPlate> {
    if !(d > 0.0 && f > 0.0) {
        return Err(Error::invalid("distance and focal length must be positive"));
    }
    let k = pose.0.cos() * pose.1.cos();
    let px = |m: f64| f * m / d;
    let plate_w = px(PLATE_WIDTH_M).ceil().max(1.0) as usize;
    let plate_h = (px(PLATE_HEIGHT_M) * k).ceil().max(1.0) as usize;
    let char_h = px(spec.char_height_m) * k;
    let stroke = px(spec.stroke_m);
    let pitch = px(spec.gap_m);
    let glyph_w = GLYPH_WIDTH_FRAC * px(spec.char_height_m);
    let cy = plate_h as f64 / 2.0;
    let row_w = pitch * (GLYPH_COUNT - 1) as f64 + glyph_w;
    let x_start = (plate_w as f64 - row_w) / 2.0;

    let jitter = Normal::new(0.0, params.char_height_jitter.max(0.0))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut glyphs = Vec::with_capacity(GLYPH_COUNT);
    let mut rects = Vec::new();
    for i in 0..GLYPH_COUNT {
        let h = (char_h + jitter.sample(rng)).max(1.0);
        let bx = FRect::new(
            x_start + i as f64 * pitch,
            cy - h / 2.0,
            x_start + i as f64 * pitch + glyph_w,
            cy + h / 2.0,
        );
        let sx = stroke.min(glyph_w / 3.0);
        let sy = (stroke * k).min(h / 5.0);
        for r in glyph_rects(i, glyph_w, h, sx, sy) {
            rects.push(FRect::new(r.x0 + bx.x0, r.y0 + bx.y0, r.x1 + bx.x0, r.y1 + bx.y0));
        }
        glyphs.push(bx);
    }
    if params.strip_text {
        // short slogan dashes, far thinner than the characters
        let bh = 0.06 * plate_h as f64;
        for (yc, n) in [(0.08, 5usize), (0.92, 3)] {
            let y0 = yc * plate_h as f64 - bh / 2.0;
            for j in 0..n {
                let x0 = plate_w as f64 * (0.3 + 0.4 * j as f64 / n as f64);
                rects.push(FRect::new(x0, y0, x0 + 0.05 * plate_w as f64, y0 + bh));
            }
        }
    }

    let mut cover = vec![0.0f64; plate_w * plate_h];
    for r in &rects {
        let xa = r.x0.floor().max(0.0) as usize;
        let xb = (r.x1.ceil().max(0.0) as usize).min(plate_w);
        let ya = r.y0.floor().max(0.0) as usize;
        let yb = (r.y1.ceil().max(0.0) as usize).min(plate_h);
        for y in ya..yb {
            for x in xa..xb {
                cover[y * plate_w + x] += r.coverage(x as f64, y as f64);
            }
        }
    }
    let noise = Normal::new(0.0, params.intensity_noise.max(0.0))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let (bg, ink) = (params.background, params.ink);
    let data = cover
        .iter()
        .map(|&c| {
            let v = bg - (bg - ink) * c.min(1.0) + noise.sample(rng);
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Ok(RenderedPlate {
        image: GrayRaster::new(plate_w, plate_h, data)?,
        glyphs,
        char_height_px: char_h,
        stroke_px: stroke,
        pitch_px: pitch,
        below_floor: char_h < SEGMENTATION_FLOOR_PX,
    })
}
