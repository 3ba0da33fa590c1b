use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use super::GrayRaster;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Projective map of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    /// Solves the map taking `from[i]` to `to[i]` with h33 fixed to 1.
    pub fn from_correspondences(from: &[Point; 4], to: &[Point; 4]) -> Result<Self> {
        for quad in [from, to] {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    for k in (j + 1)..4 {
                        let (a, b, c) = (quad[i], quad[j], quad[k]);
                        let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
                        let scale = ((b.x - a.x).hypot(b.y - a.y) * (c.x - a.x).hypot(c.y - a.y)).max(1e-300);
                        if !(cross.abs() / scale > 1e-9) {
                            return Err(Error::Degenerate(format!(
                                "corners {i}, {j}, {k} are collinear"
                            )));
                        }
                    }
                }
            }
        }
        let mut a = SMatrix::<f64, 8, 8>::zeros();
        let mut b = SVector::<f64, 8>::zeros();
        for i in 0..4 {
            let (x, y, u, v) = (from[i].x, from[i].y, to[i].x, to[i].y);
            a.set_row(
                2 * i,
                &SMatrix::<f64, 1, 8>::from_row_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]),
            );
            a.set_row(
                2 * i + 1,
                &SMatrix::<f64, 1, 8>::from_row_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]),
            );
            b[2 * i] = u;
            b[2 * i + 1] = v;
        }
        let h = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Degenerate("homography system is singular".into()))?;
        Ok(Homography(Matrix3::new(
            h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0,
        )))
    }

    pub fn apply(&self, p: Point) -> Point {
        let r = self.0 * Vector3::new(p.x, p.y, 1.0);
        Point::new(r.x / r.z, r.y / r.z)
    }
}

/// Maps the quad `corners` (TL, TR, BR, BL, pixel-centre coordinates) onto an
/// `out_w` x `out_h` rectangle with bilinear sampling; samples falling
/// outside the source are 0.
pub fn warp_rectify(
    img: &GrayRaster,
    corners: &[Point; 4],
    out_w: usize,
    out_h: usize,
) -> Result<GrayRaster> {
    img.ensure_non_empty()?;
    if out_w < 2 || out_h < 2 {
        return Err(Error::invalid("output must be at least 2x2"));
    }
    let (ow, oh) = ((out_w - 1) as f64, (out_h - 1) as f64);
    let dst = [
        Point::new(0.0, 0.0),
        Point::new(ow, 0.0),
        Point::new(ow, oh),
        Point::new(0.0, oh),
    ];
    let h = Homography::from_correspondences(&dst, corners)?;
    Ok(GrayRaster::from_fn(out_w, out_h, |x, y| {
        let s = h.apply(Point::new(x as f64, y as f64));
        sample_bilinear(img, s.x, s.y)
    }))
}

fn sample_bilinear(img: &GrayRaster, x: f64, y: f64) -> u8 {
    const EPS: f64 = 1e-9;
    let (w, h) = ((img.width() - 1) as f64, (img.height() - 1) as f64);
    if !(x >= -EPS && y >= -EPS && x <= w + EPS && y <= h + EPS) {
        return 0;
    }
    let snap = |v: f64| if (v - v.round()).abs() < EPS { v.round() } else { v };
    let (x, y) = (snap(x).clamp(0.0, w), snap(y).clamp(0.0, h));
    let (x0, y0) = (x.floor(), y.floor());
    let (tx, ty) = (x - x0, y - y0);
    let (xi, yi) = (x0 as isize, y0 as isize);
    let p = |dx: isize, dy: isize| img.get_clamped(xi + dx, yi + dy) as f64;
    let top = p(0, 0) * (1.0 - tx) + p(1, 0) * tx;
    let bot = p(0, 1) * (1.0 - tx) + p(1, 1) * tx;
    (top * (1.0 - ty) + bot * ty).round().clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(x0: f64, y0: f64, w: usize, h: usize) -> [Point; 4] {
        let (x1, y1) = (x0 + (w - 1) as f64, y0 + (h - 1) as f64);
        [
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]
    }

    #[test]
    fn translated_rectangle_gives_shifted_copy() {
        let img = GrayRaster::from_fn(20, 8, |x, y| (x * 11 + y * 3) as u8);
        let out = warp_rectify(&img, &rect(5.0, 0.0, 10, 8), 10, 8).unwrap();
        for y in 0..8 {
            for x in 0..10 {
                assert_eq!(out.get(x, y), img.get(x + 5, y));
            }
        }
    }

    #[test]
    fn collinear_corners_are_rejected() {
        let img = GrayRaster::filled(10, 10, 1);
        let c = [
            Point::new(0.0, 0.0),
            Point::new(5.0, 5.0),
            Point::new(9.0, 9.0),
            Point::new(0.0, 9.0),
        ];
        assert!(matches!(warp_rectify(&img, &c, 5, 5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn projective_quad_round_trips_corners() {
        let img = GrayRaster::from_fn(60, 40, |x, y| ((x * 7) ^ (y * 5)) as u8);
        let quad = [
            Point::new(4.0, 3.0),
            Point::new(52.0, 7.0),
            Point::new(55.0, 36.0),
            Point::new(2.0, 33.0),
        ];
        let (ow, oh) = (30usize, 15usize);
        let dst = rect(0.0, 0.0, ow, oh);
        let h = Homography::from_correspondences(&dst, &quad).unwrap();
        for (d, q) in dst.iter().zip(&quad) {
            let m = h.apply(*d);
            assert!((m.x - q.x).abs() < 1e-6 && (m.y - q.y).abs() < 1e-6);
        }
        let out = warp_rectify(&img, &quad, ow, oh).unwrap();
        assert_eq!(out.get(0, 0), img.get(4, 3));
        assert_eq!(out.get(ow - 1, 0), img.get(52, 7));
        assert_eq!(out.get(ow - 1, oh - 1), img.get(55, 36));
        assert_eq!(out.get(0, oh - 1), img.get(2, 33));
    }

    #[test]
    fn outside_samples_are_zero() {
        let img = GrayRaster::filled(10, 10, 200);
        let out = warp_rectify(&img, &rect(-5.0, 0.0, 10, 10), 10, 10).unwrap();
        assert_eq!(out.get(0, 5), 0);
        assert_eq!(out.get(9, 5), 200);
    }

    proptest! {
        #[test]
        fn identity_warp_is_bit_exact(w in 2usize..24, h in 2usize..24, seed: u32) {
            let img = GrayRaster::from_fn(w, h, |x, y| (seed as usize).wrapping_mul(x * 31 + y * 17 + 1) as u8);
            let out = warp_rectify(&img, &rect(0.0, 0.0, w, h), w, h).unwrap();
            prop_assert_eq!(out, img);
        }
    }
}
