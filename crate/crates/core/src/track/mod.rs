//! Temporal side of the pipeline: metric scale for relative depth, fusion of
//! the geometric and deep branches, constant-velocity tracking and collision
//! warnings.

mod fusion;
mod kalman;
mod safety;
mod scale;

pub use fusion::{fuse_geo_deep, Estimate};
pub use kalman::{kalman_step, step_with_r, KalmanParams, TrackState};
pub use safety::{
    optical_cross_check, safety, ttc, warning_level, SafetyOutput, WarningLevel, CONSISTENCY_THRESHOLD,
};
pub use scale::{deep_metric, ScaleTracker, VAR_DEEP_FLOOR};
