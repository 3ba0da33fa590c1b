use super::GrayRaster;
use crate::error::{Error, Result};

const A: f64 = -0.5;

fn keys(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic upscaling (Keys kernel, a = -0.5) with pixel-centre alignment and
/// replicated borders. Output size is the input size times `factor`, rounded.
pub fn resize_bicubic(img: &GrayRaster, factor: f64) -> Result<GrayRaster> {
    if !(factor >= 1.0) || !factor.is_finite() {
        return Err(Error::invalid(format!("resize factor {factor} must be >= 1")));
    }
    if factor == 1.0 {
        return Ok(img.clone());
    }
    let ow = (img.width() as f64 * factor).round() as usize;
    let oh = (img.height() as f64 * factor).round() as usize;
    if img.is_empty() {
        return Ok(GrayRaster::filled(0, 0, 0));
    }
    let taps = |o: usize| -> (isize, [f64; 4]) {
        let s = (o as f64 + 0.5) / factor - 0.5;
        let i = s.floor();
        let t = s - i;
        (
            i as isize - 1,
            [keys(1.0 + t), keys(t), keys(1.0 - t), keys(2.0 - t)],
        )
    };
    let xt: Vec<_> = (0..ow).map(taps).collect();
    let yt: Vec<_> = (0..oh).map(taps).collect();
    // horizontal pass per source row, then the vertical pass over those sums
    let (w, h) = (img.width(), img.height());
    let mut rows = vec![0.0f64; ow * h];
    for y in 0..h {
        let src = &img.data()[y * w..(y + 1) * w];
        for (x, &(x0, wx)) in xt.iter().enumerate() {
            let mut row = 0.0;
            for (i, wxi) in wx.iter().enumerate() {
                let xi = (x0 + i as isize).clamp(0, w as isize - 1) as usize;
                row += wxi * src[xi] as f64;
            }
            rows[y * ow + x] = row;
        }
    }
    let mut out = Vec::with_capacity(ow * oh);
    for &(y0, wy) in &yt {
        let idx: [usize; 4] = std::array::from_fn(|j| (y0 + j as isize).clamp(0, h as isize - 1) as usize);
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, wyj) in wy.iter().enumerate() {
                acc += wyj * rows[idx[j] * ow + x];
            }
            out.push(acc.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayRaster::new(ow, oh, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_is_interpolating() {
        assert_eq!(keys(0.0), 1.0);
        assert_eq!(keys(1.0), 0.0);
        assert_eq!(keys(2.0), 0.0);
        let t = 0.3;
        let s = keys(1.0 + t) + keys(t) + keys(1.0 - t) + keys(2.0 - t);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factor_one_is_identity() {
        let img = GrayRaster::from_fn(5, 4, |x, y| (x * 40 + y * 7) as u8);
        assert_eq!(resize_bicubic(&img, 1.0).unwrap(), img);
    }

    #[test]
    fn rejects_shrinking() {
        let img = GrayRaster::filled(3, 3, 9);
        assert!(resize_bicubic(&img, 0.5).is_err());
        assert!(resize_bicubic(&img, f64::NAN).is_err());
    }

    #[test]
    fn checkerboard_corners_survive() {
        let img = GrayRaster::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        let r = resize_bicubic(&img, 2.0).unwrap();
        assert_eq!((r.width(), r.height()), (4, 4));
        assert_eq!(r.get(0, 0), 0);
        assert_eq!(r.get(3, 0), 255);
        assert_eq!(r.get(0, 3), 255);
        assert_eq!(r.get(3, 3), 0);
    }

    #[test]
    fn dimensions_round() {
        let img = GrayRaster::filled(7, 3, 1);
        let r = resize_bicubic(&img, 2.5).unwrap();
        assert_eq!((r.width(), r.height()), (18, 8));
    }

    proptest! {
        #[test]
        fn uniform_stays_uniform(v: u8, w in 1usize..8, h in 1usize..8, f in 1.0f64..4.0) {
            let img = GrayRaster::filled(w, h, v);
            let r = resize_bicubic(&img, f).unwrap();
            prop_assert!(r.data().iter().all(|&p| p == v));
        }
    }
}
