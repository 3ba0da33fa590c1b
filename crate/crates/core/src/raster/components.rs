use serde::{Deserialize, Serialize};

use super::{BBox, BinaryRaster};

/// One 8-connected foreground component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub bbox: BBox,
    pub area: usize,
    /// Member pixels as `(x, y)`, in discovery order.
    pub pixels: Vec<(usize, usize)>,
}

/// Labels 8-connected components, ordered by `(bbox.y, bbox.x)`.
pub fn components(img: &BinaryRaster) -> Vec<Region> {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !img.get(x0, y0) || seen[y0 * w + x0] {
                continue;
            }
            seen[y0 * w + x0] = true;
            stack.push((x0, y0));
            let mut pixels = Vec::new();
            let (mut x_min, mut x_max, mut y_min, mut y_max) = (x0, x0, y0, y0);
            while let Some((x, y)) = stack.pop() {
                pixels.push((x, y));
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (nx, ny) = (x as isize + dx, y as isize + dy);
                        if img.get_or_bg(nx, ny) {
                            let i = ny as usize * w + nx as usize;
                            if !seen[i] {
                                seen[i] = true;
                                stack.push((nx as usize, ny as usize));
                            }
                        }
                    }
                }
            }
            out.push(Region {
                bbox: BBox::new(x_min, y_min, x_max - x_min + 1, y_max - y_min + 1),
                area: pixels.len(),
                pixels,
            });
        }
    }
    out.sort_by_key(|r| (r.bbox.y, r.bbox.x));
    out
}
