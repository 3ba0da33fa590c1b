//! Camera pitch and roll relative to the plate plane, and the
//! foreshortening correction they imply for measured character height.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest pitch accepted from a vanishing point (20 degrees).
pub const MAX_PITCH: f64 = 0.35;
/// Largest roll accepted from line segments (about 11 degrees).
pub const MAX_ROLL: f64 = 0.2;
/// Weight of the previous pose in temporal smoothing.
pub const POSE_SMOOTHING: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoseSource {
    VanishingPoint,
    Fallback,
    Zero,
}

/// Pitch `phi` and roll `psi` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub phi: f64,
    pub psi: f64,
    pub source: PoseSource,
}

impl PoseEstimate {
    pub fn zero() -> Self {
        PoseEstimate {
            phi: 0.0,
            psi: 0.0,
            source: PoseSource::Zero,
        }
    }

    pub fn new(phi: f64, psi: f64) -> Self {
        PoseEstimate {
            phi,
            psi,
            source: PoseSource::VanishingPoint,
        }
    }

    /// `cos(phi) * cos(psi)`.
    pub fn foreshortening(&self) -> f64 {
        self.phi.cos() * self.psi.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl LineSegment {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        if !(x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite()) {
            return Err(Error::invalid("segment endpoints must be finite"));
        }
        if x1 == x2 && y1 == y2 {
            return Err(Error::invalid("segment endpoints coincide"));
        }
        Ok(LineSegment { x1, y1, x2, y2 })
    }
}

/// `atan((v_inf - H_I/2) / f)`.
pub fn pitch_from_vanishing(v_inf: f64, image_height: f64, f: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::invalid("focal length must be positive"));
    }
    Ok(((v_inf - image_height / 2.0) / f).atan())
}

/// Mean of the per-segment slope angles.
pub fn roll_from_segments(segs: &[LineSegment]) -> Result<f64> {
    if segs.is_empty() {
        return Err(Error::Empty("no line segments"));
    }
    let mut sum = 0.0;
    for s in segs {
        let dx = s.x2 - s.x1;
        if dx == 0.0 {
            return Err(Error::Degenerate("vertical line segment".into()));
        }
        sum += ((s.y2 - s.y1) / dx).atan();
    }
    Ok(sum / segs.len() as f64)
}

/// Undoes foreshortening: `h / (cos(phi) cos(psi))`.
pub fn correct_height(h_bar: f64, pose: &PoseEstimate) -> f64 {
    h_bar / pose.foreshortening()
}

/// Pinhole distance from the corrected height,
/// `(f H_s / h) cos(phi) cos(psi)`.
pub fn compensated_distance(f: f64, h_s: f64, h_bar: f64, pose: &PoseEstimate) -> Result<f64> {
    if !(h_bar > 0.0) {
        return Err(Error::invalid("character height must be positive"));
    }
    Ok(f * h_s / h_bar * pose.foreshortening())
}

/// First-order relative distance error from pose errors:
/// `(tan(phi) dphi, tan(psi) dpsi)`.
pub fn pose_error_terms(phi: f64, dphi: f64, psi: f64, dpsi: f64) -> (f64, f64) {
    (phi.tan() * dphi, psi.tan() * dpsi)
}

/// Raw per-frame pose from an optional vanishing-point row and lane
/// segments. Components that are missing or implausible are `None`.
pub fn measure_pose(
    v_inf: Option<f64>,
    segments: &[LineSegment],
    image_height: f64,
    f: f64,
) -> (Option<f64>, Option<f64>) {
    let phi = v_inf
        .and_then(|v| pitch_from_vanishing(v, image_height, f).ok())
        .filter(|p| p.abs() <= MAX_PITCH);
    let psi = roll_from_segments(segments)
        .ok()
        .filter(|p| p.abs() <= MAX_ROLL);
    (phi, psi)
}

/// Exponential smoothing of pose over frames. Rejected components reuse the
/// previous smoothed value, or zero before any valid estimate.
#[derive(Debug, Clone, Default)]
pub struct PoseSmoother {
    phi: Option<f64>,
    psi: Option<f64>,
}

impl PoseSmoother {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, phi: Option<f64>, psi: Option<f64>) -> PoseEstimate {
        let blend = |prev: Option<f64>, new: Option<f64>| match (prev, new) {
            (Some(p), Some(n)) => Some(POSE_SMOOTHING * p + (1.0 - POSE_SMOOTHING) * n),
            (None, n) => n,
            (p, None) => p,
        };
        let fresh_phi = phi.is_some();
        let had_prev = self.phi.is_some() || self.psi.is_some();
        self.phi = blend(self.phi, phi);
        self.psi = blend(self.psi, psi);
        let source = if fresh_phi {
            PoseSource::VanishingPoint
        } else if had_prev {
            PoseSource::Fallback
        } else {
            PoseSource::Zero
        };
        PoseEstimate {
            phi: self.phi.unwrap_or(0.0),
            psi: self.psi.unwrap_or(0.0),
            source,
        }
    }
}

/// One segment per line as four numbers `x1 y1 x2 y2`, separated by
/// whitespace or commas; `#` starts a comment.
pub fn parse_segments(text: &str) -> Result<Vec<LineSegment>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(idx + 1, "segment fields must be numbers"))?;
        if v.len() != 4 {
            return Err(Error::parse(idx + 1, format!("expected 4 numbers, found {}", v.len())));
        }
        out.push(LineSegment::new(v[0], v[1], v[2], v[3]).map_err(|e| Error::parse(idx + 1, e.to_string()))?);
    }
    Ok(out)
}
