use serde::{Deserialize, Serialize};

use super::BinaryRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MorphOp {
    /// Erosion followed by dilation.
    Open,
    /// Dilation followed by erosion.
    Close,
}

/// Opening or closing with a 3x3 square.
pub fn morph(img: &BinaryRaster, op: MorphOp) -> BinaryRaster {
    match op {
        MorphOp::Open => open(img, 3),
        MorphOp::Close => close(img, 3),
    }
}

pub fn open(img: &BinaryRaster, k: usize) -> BinaryRaster {
    dilate(&erode(img, k), k)
}

pub fn close(img: &BinaryRaster, k: usize) -> BinaryRaster {
    erode(&dilate(img, k), k)
}

/// Square erosion; pixels outside the raster count as background.
pub fn erode(img: &BinaryRaster, k: usize) -> BinaryRaster {
    square(img, k, true)
}

/// Square dilation.
pub fn dilate(img: &BinaryRaster, k: usize) -> BinaryRaster {
    square(img, k, false)
}

// Separable: a k x k square is a row pass then a column pass, each keeping a
// running count of set pixels in the window. Outside pixels are unset, so
// erosion needs a full window and dilation any set pixel.
fn square(img: &BinaryRaster, k: usize, erode: bool) -> BinaryRaster {
    let r = k / 2;
    let (w, h) = (img.width(), img.height());
    let full = (2 * r + 1) as u32;
    let keep = |count: u32| if erode { count == full } else { count > 0 };
    let src = img.data();

    let mut rows = vec![false; w * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        let mut count: u32 = line[..(r + 1).min(w)].iter().map(|&b| b as u32).sum();
        for x in 0..w {
            rows[y * w + x] = keep(count);
            if x + r + 1 < w {
                count += line[x + r + 1] as u32;
            }
            if x >= r {
                count -= line[x - r] as u32;
            }
        }
    }

    let mut counts = vec![0u32; w];
    for y in 0..(r + 1).min(h) {
        for (c, &b) in counts.iter_mut().zip(&rows[y * w..(y + 1) * w]) {
            *c += b as u32;
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = keep(counts[x]);
        }
        if y + r + 1 < h {
            for (c, &b) in counts.iter_mut().zip(&rows[(y + r + 1) * w..(y + r + 2) * w]) {
                *c += b as u32;
            }
        }
        if y >= r {
            for (c, &b) in counts.iter_mut().zip(&rows[(y - r) * w..(y - r + 1) * w]) {
                *c -= b as u32;
            }
        }
    }
    BinaryRaster::new(w, h, out).expect("dimensions unchanged")
}
