use super::BinaryRaster;

/// Per-pixel distance to the nearest background pixel, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    /// Chamfer units (orthogonal step 3, diagonal step 4).
    raw: Vec<u32>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.raw[y * self.width + x] as f64 / 3.0
    }

    /// Distance in integer chamfer units (3 per orthogonal step).
    pub fn raw(&self, x: usize, y: usize) -> u32 {
        self.raw[y * self.width + x]
    }

    /// True where the value is at least that of all eight neighbours and positive.
    pub fn is_ridge(&self, x: usize, y: usize) -> bool {
        let v = self.raw(x, y);
        if v == 0 {
            return false;
        }
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
                    continue;
                }
                if self.raw(nx as usize, ny as usize) > v {
                    return false;
                }
            }
        }
        true
    }
}

/// Two-pass 3-4 chamfer transform divided by 3. Pixels outside the raster
/// count as background, so foreground touching the border has distance 1.
pub fn distance_transform(img: &BinaryRaster) -> DistanceField {
    let (w, h) = (img.width(), img.height());
    const INF: u32 = u32::MAX / 4;
    let mut d: Vec<u32> = img.data().iter().map(|&f| if f { INF } else { 0 }).collect();
    let at = |d: &Vec<u32>, x: isize, y: isize| -> u32 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            d[y as usize * w + x as usize]
        }
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            if d[i] == 0 {
                continue;
            }
            let v = d[i]
                .min(at(&d, x - 1, y) + 3)
                .min(at(&d, x, y - 1) + 3)
                .min(at(&d, x - 1, y - 1) + 4)
                .min(at(&d, x + 1, y - 1) + 4);
            d[i] = v;
        }
    }
    for y in (0..h as isize).rev() {
        for x in (0..w as isize).rev() {
            let i = y as usize * w + x as usize;
            if d[i] == 0 {
                continue;
            }
            let v = d[i]
                .min(at(&d, x + 1, y) + 3)
                .min(at(&d, x, y + 1) + 3)
                .min(at(&d, x + 1, y + 1) + 4)
                .min(at(&d, x - 1, y + 1) + 4);
            d[i] = v;
        }
    }
    DistanceField {
        width: w,
        height: h,
        raw: d,
    }
}
