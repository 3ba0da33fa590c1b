use std::collections::VecDeque;

use super::{BBox, BinaryRaster, GrayRaster};

/// Canny edge map: 3x3 Sobel with L1 magnitude, non-maximum suppression along
/// four quantized directions, then hysteresis grown (8-connected) from pixels
/// above `high` through pixels above `low`.
pub fn canny(img: &GrayRaster, low: f64, high: f64) -> BinaryRaster {
    let (w, h) = (img.width(), img.height());
    let mut mag = vec![0.0f64; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = |dx: isize, dy: isize| img.get_clamped(x as isize + dx, y as isize + dy) as f64;
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            mag[y * w + x] = gx.abs() + gy.abs();
            dir[y * w + x] = quantize_direction(gx, gy);
        }
    }

    let m = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    // 0: gradient along x, 1: along the y=x diagonal, 2: along y, 3: anti-diagonal
    let mut thin = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let v = mag[y * w + x];
            if v <= low {
                continue;
            }
            let (xi, yi) = (x as isize, y as isize);
            let (a, b) = match dir[y * w + x] {
                0 => (m(xi - 1, yi), m(xi + 1, yi)),
                1 => (m(xi - 1, yi - 1), m(xi + 1, yi + 1)),
                2 => (m(xi, yi - 1), m(xi, yi + 1)),
                _ => (m(xi + 1, yi - 1), m(xi - 1, yi + 1)),
            };
            // asymmetric comparison keeps one pixel of a two-pixel plateau
            if v > a && v >= b {
                thin[y * w + x] = v;
            }
        }
    }

    let mut out = BinaryRaster::empty(w, h);
    let mut queue = VecDeque::new();
    for (i, &v) in thin.iter().enumerate() {
        if v > high {
            out.set(i % w, i / w, true);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if thin[j] > low && !out.get(nx as usize, ny as usize) {
                    out.set(nx as usize, ny as usize, true);
                    queue.push_back(j);
                }
            }
        }
    }
    out
}

fn quantize_direction(gx: f64, gy: f64) -> u8 {
    // angle folded into [0, 180)
    let mut a = gy.atan2(gx).to_degrees();
    if a < 0.0 {
        a += 180.0;
    }
    if !(22.5..157.5).contains(&a) {
        0
    } else if a < 67.5 {
        1
    } else if a < 112.5 {
        2
    } else {
        3
    }
}

/// Fraction of Canny edge pixels (30/100 hysteresis) inside `bbox`.
pub fn edge_density(img: &GrayRaster, bbox: BBox) -> f64 {
    if bbox.area() == 0 {
        return 0.0;
    }
    let crop = match img.crop(bbox) {
        Ok(c) => c,
        Err(_) => return 0.0,
    };
    canny(&crop, 30.0, 100.0).count() as f64 / bbox.area() as f64
}
