//! Grayscale and binary raster kernels.
//!
//! Rasters are row-major and immutable once built; every kernel is a pure
//! input-to-output transform.

mod canny;
mod components;
mod distance;
mod morph;
pub mod pgm;
mod projection;
mod resize;
mod threshold;
mod warp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use canny::{canny, edge_density};
pub use components::{components, Region};
pub use distance::{distance_transform, DistanceField};
pub use morph::{close, dilate, erode, morph, open, MorphOp};
pub use projection::{column_profile, vertical_projection_peaks};
pub use resize::resize_bicubic;
pub use threshold::{
    adaptive_gaussian, bilateral_filter, binarize, otsu, otsu_threshold, BinarizeMethod,
};
pub use warp::{warp_rectify, Homography, Point};

/// 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayRaster({}x{})", self.width, self.height)
    }
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "raster data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(GrayRaster {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayRaster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayRaster {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Pixel with replicated borders.
    #[inline]
    pub(crate) fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Sub-image; the box must lie inside the raster.
    pub fn crop(&self, b: BBox) -> Result<GrayRaster> {
        if b.x + b.w > self.width || b.y + b.h > self.height {
            return Err(Error::invalid(format!("crop {b:?} outside raster")));
        }
        Ok(GrayRaster::from_fn(b.w, b.h, |x, y| self.get(b.x + x, b.y + y)))
    }

    pub(crate) fn ensure_non_empty(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            Err(Error::Empty("raster has zero area"))
        } else {
            Ok(())
        }
    }
}

/// Binary mask; `true` is foreground.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl std::fmt::Debug for BinaryRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryRaster({}x{})", self.width, self.height)?;
        if self.width <= 64 && self.height <= 64 {
            for y in 0..self.height {
                let row: String = (0..self.width)
                    .map(|x| if self.get(x, y) { '#' } else { '.' })
                    .collect();
                writeln!(f, "{row}")?;
            }
        }
        Ok(())
    }
}

impl BinaryRaster {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "mask data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(BinaryRaster {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryRaster {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        BinaryRaster {
            width,
            height,
            data,
        }
    }

    /// Parses rows of `#` (foreground) and `.` (background); handy in tests.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        BinaryRaster::from_fn(width, height, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-bounds reads are background.
    #[inline]
    pub(crate) fn get_or_bg(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            false
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn crop(&self, b: BBox) -> Result<BinaryRaster> {
        if b.x + b.w > self.width || b.y + b.h > self.height {
            return Err(Error::invalid(format!("crop {b:?} outside mask")));
        }
        Ok(BinaryRaster::from_fn(b.w, b.h, |x, y| self.get(b.x + x, b.y + y)))
    }

    pub fn invert(&self) -> BinaryRaster {
        BinaryRaster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    /// Foreground as 255, background as 0.
    pub fn to_gray(&self) -> GrayRaster {
        GrayRaster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    /// Pixels >= 128 are foreground.
    pub fn from_gray(img: &GrayRaster) -> BinaryRaster {
        BinaryRaster {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| v >= 128).collect(),
        }
    }
}

/// Axis-aligned pixel box; `x..x+w`, `y..y+h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BBox {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn center_x(&self) -> f64 {
        self.x as f64 + self.w as f64 / 2.0
    }

    pub fn center_y(&self) -> f64 {
        self.y as f64 + self.h as f64 / 2.0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }
}
