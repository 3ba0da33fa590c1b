use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::range::project;
use crate::typography::StateSpec;

/// Ground truth for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub frame: usize,
    pub t: f64,
    pub d_true: f64,
    pub v_true: f64,
    pub occluded: bool,
    /// Foreshortened character height, pixels.
    pub h_true: f64,
    /// Relative depth as a monocular network would report it.
    pub d_plate: f64,
    pub pitch: f64,
    pub roll: f64,
}

/// Random stream for frame `k`. Even streams drive truth, odd streams drive
/// rendering, so either can be regenerated independently.
pub(crate) fn frame_rng(seed: u64, frame: usize, render: bool) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * frame as u64 + render as u64);
    rng
}

pub fn frame_truth(sc: &Scenario, camera: &CameraModel, spec: &StateSpec, frame: usize) -> Result<FrameTruth> {
    let t = sc.time_of(frame);
    let d = sc.distance_at(t);
    let (pitch, roll) = sc.pose_at(t);
    let mut rng = frame_rng(sc.seed, frame, false);
    let noise = Normal::new(0.0, sc.noise.depth.max(0.0)).map_err(|e| Error::invalid(e.to_string()))?;
    let d_plate = d / sc.hidden_depth_scale * (1.0 + sc.noise.depth_drift_per_s * t) + noise.sample(&mut rng);
    Ok(FrameTruth {
        frame,
        t,
        d_true: d,
        v_true: sc.velocity_at(t),
        occluded: sc.occluded_at(t),
        h_true: project(camera.f_px, spec.char_height_m, d) * pitch.cos() * roll.cos(),
        d_plate,
        pitch,
        roll,
    })
}

/// Truth for every frame of the scenario.
pub fn gen_frames(sc: &Scenario, camera: &CameraModel, spec: &StateSpec) -> Result<Vec<FrameTruth>> {
    sc.validate()?;
    (0..sc.frame_count())
        .map(|k| frame_truth(sc, camera, spec, k))
        .collect()
}
