use serde::{Deserialize, Serialize};

use super::TrackState;
use crate::error::{Error, Result};

/// Closing speed below which no time-to-collision is reported, m/s.
pub const MIN_CLOSING_SPEED: f64 = 0.1;
pub const DANGER_TTC: f64 = 1.0;
pub const CAUTION_TTC: f64 = 2.0;
pub const CAUTION_SPEED: f64 = -3.0;
/// Largest tolerated gap between optical and filtered velocity, m/s.
pub const CONSISTENCY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WarningLevel {
    Safe,
    Caution,
    Danger,
}

impl WarningLevel {
    pub fn label(self) -> &'static str {
        match self {
            WarningLevel::Safe => "safe",
            WarningLevel::Caution => "caution",
            WarningLevel::Danger => "danger",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyOutput {
    pub d_smoothed: f64,
    pub v: f64,
    pub ttc: Option<f64>,
    pub level: WarningLevel,
    pub inconsistency: bool,
}

pub fn warning_level(ttc: Option<f64>, v: f64) -> WarningLevel {
    match ttc {
        Some(t) if t < DANGER_TTC => WarningLevel::Danger,
        Some(t) if t < CAUTION_TTC => WarningLevel::Caution,
        _ if v < CAUTION_SPEED => WarningLevel::Caution,
        _ => WarningLevel::Safe,
    }
}

/// Time-to-collision `D / |v|`, only while closing faster than 0.1 m/s.
pub fn ttc(d: f64, v: f64) -> Option<f64> {
    (v < -MIN_CLOSING_SPEED).then(|| d / v.abs())
}

pub fn safety(s: &TrackState) -> SafetyOutput {
    let (d, v) = (s.distance(), s.velocity());
    let t = ttc(d, v);
    SafetyOutput {
        d_smoothed: d,
        v,
        ttc: t,
        level: warning_level(t, v),
        inconsistency: false,
    }
}

/// Velocity implied by the rate of change of character height,
/// `-D * hdot / h`, with `hdot` the least-squares slope of `(h, t)` samples.
/// Flags an inconsistency when it differs from `v_kalman` by more than
/// 0.5 m/s.
pub fn optical_cross_check(d: f64, history: &[(f64, f64)], v_kalman: f64) -> Result<(f64, bool)> {
    if history.len() < 2 {
        return Err(Error::invalid("need at least two height samples"));
    }
    let n = history.len() as f64;
    let tm = history.iter().map(|s| s.1).sum::<f64>() / n;
    let hm = history.iter().map(|s| s.0).sum::<f64>() / n;
    let stt: f64 = history.iter().map(|s| (s.1 - tm).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::invalid("height samples need distinct times"));
    }
    let sth: f64 = history.iter().map(|s| (s.1 - tm) * (s.0 - hm)).sum();
    let h_latest = history.last().expect("non-empty").0;
    if !(h_latest > 0.0) {
        return Err(Error::invalid("latest height must be positive"));
    }
    let v_opt = -d * (sth / stt) / h_latest;
    Ok((v_opt, (v_opt - v_kalman).abs() > CONSISTENCY_THRESHOLD))
}
