use serde::{Deserialize, Serialize};

use super::{canny, dilate, BinaryRaster, GrayRaster};
use crate::error::Result;

/// The four plate binarization pipelines. Foreground is dark ink for the
/// threshold variants and edge pixels for [`BinarizeMethod::CannyDilate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BinarizeMethod {
    /// Local Gaussian-weighted mean over a `window`-sized square, minus `c`.
    AdaptiveGaussian { window: usize, c: f64 },
    /// Global Otsu threshold.
    Otsu,
    /// Canny edges (L1 Sobel magnitude, hysteresis `low`/`high`) dilated by a
    /// `kernel`-sized square.
    CannyDilate { low: f64, high: f64, kernel: usize },
    /// Bilateral smoothing (`diameter`, one sigma for range and space) then Otsu.
    BilateralOtsu { diameter: usize, sigma: f64 },
}

impl BinarizeMethod {
    pub const ADAPTIVE: BinarizeMethod = BinarizeMethod::AdaptiveGaussian { window: 11, c: 2.0 };
    pub const OTSU: BinarizeMethod = BinarizeMethod::Otsu;
    pub const CANNY: BinarizeMethod = BinarizeMethod::CannyDilate {
        low: 30.0,
        high: 100.0,
        kernel: 5,
    };
    pub const BILATERAL: BinarizeMethod = BinarizeMethod::BilateralOtsu {
        diameter: 9,
        sigma: 75.0,
    };

    /// All four detector pipelines with their default parameters.
    pub const ALL: [BinarizeMethod; 4] = [Self::ADAPTIVE, Self::OTSU, Self::CANNY, Self::BILATERAL];

    pub fn label(&self) -> &'static str {
        match self {
            BinarizeMethod::AdaptiveGaussian { .. } => "adaptive_gaussian",
            BinarizeMethod::Otsu => "otsu",
            BinarizeMethod::CannyDilate { .. } => "canny_dilate",
            BinarizeMethod::BilateralOtsu { .. } => "bilateral_otsu",
        }
    }
}

pub fn binarize(img: &GrayRaster, method: BinarizeMethod) -> Result<BinaryRaster> {
    img.ensure_non_empty()?;
    Ok(match method {
        BinarizeMethod::AdaptiveGaussian { window, c } => adaptive_gaussian(img, window, c),
        BinarizeMethod::Otsu => otsu(img),
        BinarizeMethod::CannyDilate { low, high, kernel } => {
            dilate(&canny(img, low, high), kernel)
        }
        BinarizeMethod::BilateralOtsu { diameter, sigma } => {
            otsu(&bilateral_filter(img, diameter, sigma))
        }
    })
}

/// Otsu threshold: the largest intensity `t` of the dark class `{v <= t}`
/// maximizing between-class variance, first maximum on ties. `None` when no
/// threshold splits the pixels into two non-empty classes.
pub fn otsu_threshold(img: &GrayRaster) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let total_n: u64 = img.data().len() as u64;
    let total_s: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let mut n0 = 0u64;
    let mut s0 = 0u64;
    let mut best: Option<(u8, Ratio)> = None;
    for (t, &c) in hist.iter().enumerate() {
        n0 += c;
        s0 += t as u64 * c;
        let n1 = total_n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_s - s0;
        let score = Ratio::between_class(n0, s0, n1, s1);
        if best.as_ref().is_none_or(|(_, b)| score.gt(b)) {
            best = Some((t as u8, score));
        }
    }
    best.map(|(t, _)| t)
}

/// Dark pixels (`<=` Otsu threshold) are foreground; a single-valued image is
/// all background.
pub fn otsu(img: &GrayRaster) -> BinaryRaster {
    match otsu_threshold(img) {
        Some(t) => {
            BinaryRaster::from_fn(img.width(), img.height(), |x, y| img.get(x, y) <= t)
        }
        None => BinaryRaster::empty(img.width(), img.height()),
    }
}

/// Between-class variance up to the constant factor `1/N^2`, kept as an exact
/// fraction `(n1*s0 - n0*s1)^2 / (n0*n1)` so that comparisons are exact.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    fn between_class(n0: u64, s0: u64, n1: u64, s1: u64) -> Ratio {
        let a = n1 as i128 * s0 as i128;
        let b = n0 as i128 * s1 as i128;
        let diff = (a - b).unsigned_abs();
        let num = diff
            .checked_mul(diff)
            .expect("raster too large for exact Otsu");
        Ratio {
            num,
            den: n0 as u128 * n1 as u128,
        }
    }

    fn gt(&self, other: &Ratio) -> bool {
        let (qa, ra) = (self.num / self.den, self.num % self.den);
        let (qb, rb) = (other.num / other.den, other.num % other.den);
        if qa != qb {
            return qa > qb;
        }
        // remainders are below their denominators, so these products stay small
        ra * other.den > rb * self.den
    }
}

fn gaussian_kernel(window: usize) -> Vec<f64> {
    let sigma = 0.3 * ((window as f64 - 1.0) * 0.5 - 1.0) + 0.8;
    let r = (window / 2) as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with replicated borders, in floating point.
fn gaussian_blur(img: &GrayRaster, window: usize) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let k = gaussian_kernel(window);
    let r = (k.len() / 2) as isize;
    let clamped = |n: usize| -> Vec<usize> {
        (-r..n as isize + r).map(|i| i.clamp(0, n as isize - 1) as usize).collect()
    };
    let (cx, cy) = (clamped(w), clamped(h));
    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        let row = &img.data()[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                acc += kv * row[cx[x + i]] as f64;
            }
            horiz[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                acc += kv * horiz[cy[y + i] * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Foreground where the pixel is darker than its Gaussian-weighted local mean minus `c`.
pub fn adaptive_gaussian(img: &GrayRaster, window: usize, c: f64) -> BinaryRaster {
    let window = window.max(3) | 1;
    let mean = gaussian_blur(img, window);
    let w = img.width();
    BinaryRaster::from_fn(w, img.height(), |x, y| {
        (img.get(x, y) as f64) < mean[y * w + x] - c
    })
}

/// Edge-preserving smoothing over a circular window of the given diameter.
pub fn bilateral_filter(img: &GrayRaster, diameter: usize, sigma: f64) -> GrayRaster {
    let r = (diameter / 2).max(1) as isize;
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = dx * dx + dy * dy;
            if d2 <= r * r {
                offsets.push((dx, dy, (-(d2 as f64) * inv2s2).exp()));
            }
        }
    }
    let range_w: Vec<f64> = (0..256).map(|d| (-((d * d) as f64) * inv2s2).exp()).collect();
    GrayRaster::from_fn(img.width(), img.height(), |x, y| {
        let c = img.get(x, y) as i32;
        let mut acc = 0.0;
        let mut norm = 0.0;
        for &(dx, dy, ws) in &offsets {
            let v = img.get_clamped(x as isize + dx, y as isize + dy) as i32;
            let wgt = ws * range_w[(v - c).unsigned_abs() as usize];
            acc += wgt * v as f64;
            norm += wgt;
        }
        (acc / norm).round().clamp(0.0, 255.0) as u8
    })
}
