//! Metric ranging of a lead vehicle from the typography of its license plate.
//!
//! Character height is a standardized physical quantity per issuing
//! jurisdiction, so a segmented plate works as a passive fiducial: the mean
//! measured character height plus a calibrated focal length gives distance
//! through the pinhole model. Around that core the crate provides:
//!
//! - [`camera`] and [`typography`]: intrinsics, lens presets, focal-length
//!   calibration and the per-state character dimensions.
//! - [`raster`]: the grayscale/binary kernels (four binarizers, morphology,
//!   connected components, chamfer distance transform, bicubic resize,
//!   homography rectification, PGM I/O).
//! - [`detect`]: candidate scoring, verification and the strict/permissive
//!   detector mode machine.
//! - [`segment`]: dual-threshold character segmentation and the three
//!   typographic measurements (height, stroke width, pitch).
//! - [`state_id`]: marker-text matching, HSV design scoring and the staged
//!   jurisdiction decision.
//! - [`pose`]: pitch/roll from a vanishing point and line segments, and
//!   foreshortening compensation.
//! - [`range`]: per-feature pinhole estimates, inverse-variance fusion and
//!   the first-order error budget.
//! - [`track`]: relative-depth scale alignment, geometric/deep fusion with
//!   occlusion hold, the constant-velocity Kalman filter and collision
//!   warnings.
//! - [`sim`]: a deterministic synthetic plate/trajectory generator and the
//!   end-to-end per-frame pipeline that produces session logs.
//!
//! OCR text, classifier probabilities and relative depth are consumed as
//! injected inputs; nothing here runs a neural network.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod config;
pub mod detect;
mod error;
pub mod pose;
pub mod range;
pub mod raster;
pub mod segment;
pub mod sim;
pub mod state_id;
pub mod track;
pub mod typography;

pub use error::{Error, Result};
