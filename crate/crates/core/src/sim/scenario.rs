use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_text, Error, Result};
use crate::state_id::{OcrRead, Strip};

/// Scenario file contents. All times are seconds from the first frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub duration_s: f64,
    pub initial_distance_m: f64,
    /// Jurisdiction of the lead vehicle's plate.
    #[serde(default = "default_state")]
    pub state: String,
    #[serde(default)]
    pub seed: u64,
    /// Metres per unit of the simulated relative depth.
    #[serde(default = "default_depth_scale")]
    pub hidden_depth_scale: f64,
    /// Piecewise-constant relative velocity; before the first segment the
    /// velocity is zero.
    #[serde(default)]
    pub velocity: Vec<VelocitySegment>,
    #[serde(default)]
    pub occlusion: Vec<Occlusion>,
    /// Piecewise-constant camera pose.
    #[serde(default)]
    pub pose: Vec<PoseSegment>,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Text the OCR stage would read off the plate strips.
    #[serde(default)]
    pub ocr: Vec<OcrEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocitySegment {
    pub start_s: f64,
    pub v_mps: f64,
}

/// Half-open interval `[start_s, start_s + len_s)` with no plate visible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occlusion {
    pub start_s: f64,
    pub len_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSegment {
    pub start_s: f64,
    #[serde(default)]
    pub pitch_rad: f64,
    #[serde(default)]
    pub roll_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-character height jitter, pixels.
    pub char_height_px: f64,
    /// Additive Gaussian intensity noise, gray levels.
    pub intensity: f64,
    /// Additive noise on relative depth, in relative units.
    pub depth: f64,
    /// Multiplicative relative-depth drift per second.
    pub depth_drift_per_s: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            char_height_px: 0.0,
            intensity: 2.0,
            depth: 0.0,
            depth_drift_per_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrEntry {
    pub text: String,
    pub conf: f64,
    #[serde(default = "default_strip")]
    pub strip: Strip,
}

fn default_fps() -> f64 {
    25.0
}

fn default_state() -> String {
    "MI".into()
}

fn default_depth_scale() -> f64 {
    0.7
}

fn default_strip() -> Strip {
    Strip::Top
}

/// Slack on interval boundaries so `k / fps` rounding never moves a frame.
const TIME_EPS: f64 = 1e-9;

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// A plate standing still at `d` metres.
    pub fn static_at(d: f64, duration_s: f64, seed: u64) -> Self {
        Scenario {
            fps: default_fps(),
            duration_s,
            initial_distance_m: d,
            state: default_state(),
            seed,
            hidden_depth_scale: default_depth_scale(),
            velocity: vec![],
            occlusion: vec![],
            pose: vec![],
            noise: NoiseModel::default(),
            ocr: vec![OcrEntry {
                text: "PURE MICHIGAN".into(),
                conf: 0.92,
                strip: Strip::Bottom,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("scenario: {m}")));
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !finite_pos(self.fps) {
            return bad("fps must be positive".into());
        }
        if !finite_pos(self.duration_s) {
            return bad("duration_s must be positive".into());
        }
        if !finite_pos(self.initial_distance_m) {
            return bad("initial_distance_m must be positive".into());
        }
        if !finite_pos(self.hidden_depth_scale) {
            return bad("hidden_depth_scale must be positive".into());
        }
        if self.frame_count() == 0 || self.frame_count() > 10_000_000 {
            return bad("frame count out of range".into());
        }
        let n = self.noise;
        for (name, v) in [
            ("char_height_px", n.char_height_px),
            ("intensity", n.intensity),
            ("depth", n.depth),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("noise.{name} must be non-negative"));
            }
        }
        if !n.depth_drift_per_s.is_finite() {
            return bad("noise.depth_drift_per_s must be finite".into());
        }
        let sorted = |starts: Vec<f64>| starts.windows(2).all(|w| w[0] < w[1]);
        if self.velocity.iter().any(|s| !(s.start_s >= 0.0) || !s.v_mps.is_finite())
            || !sorted(self.velocity.iter().map(|s| s.start_s).collect())
        {
            return bad("velocity segments need increasing non-negative start times".into());
        }
        if self
            .pose
            .iter()
            .any(|p| !(p.start_s >= 0.0) || !(p.pitch_rad.abs() < 1.5) || !(p.roll_rad.abs() < 1.5))
            || !sorted(self.pose.iter().map(|s| s.start_s).collect())
        {
            return bad("pose segments need increasing start times and angles below 1.5 rad".into());
        }
        for o in &self.occlusion {
            if !(o.start_s >= 0.0 && o.len_s > 0.0 && o.start_s + o.len_s <= self.duration_s + TIME_EPS) {
                return bad(format!("occlusion {o:?} outside the run"));
            }
        }
        for r in &self.ocr {
            if !(0.0..=1.0).contains(&r.conf) {
                return bad("ocr conf must lie in [0, 1]".into());
            }
        }
        for k in 0..self.frame_count() {
            let d = self.distance_at(self.time_of(k));
            if !(d > 0.0) {
                return bad(format!("distance reaches {d:.3} m at frame {k}"));
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps + TIME_EPS).floor() as usize
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    pub fn time_of(&self, frame: usize) -> f64 {
        frame as f64 / self.fps
    }

    pub fn velocity_at(&self, t: f64) -> f64 {
        self.velocity
            .iter()
            .take_while(|s| s.start_s <= t + TIME_EPS)
            .last()
            .map_or(0.0, |s| s.v_mps)
    }

    /// Integral of the velocity profile.
    pub fn distance_at(&self, t: f64) -> f64 {
        let mut d = self.initial_distance_m;
        for (i, s) in self.velocity.iter().enumerate() {
            if s.start_s >= t {
                break;
            }
            let end = self.velocity.get(i + 1).map_or(t, |n| n.start_s.min(t));
            d += s.v_mps * (end - s.start_s);
        }
        d
    }

    pub fn pose_at(&self, t: f64) -> (f64, f64) {
        self.pose
            .iter()
            .take_while(|p| p.start_s <= t + TIME_EPS)
            .last()
            .map_or((0.0, 0.0), |p| (p.pitch_rad, p.roll_rad))
    }

    pub fn occluded_at(&self, t: f64) -> bool {
        self.occlusion
            .iter()
            .any(|o| t >= o.start_s - TIME_EPS && t < o.start_s + o.len_s - TIME_EPS)
    }

    pub fn ocr_reads(&self) -> Vec<OcrRead> {
        self.ocr
            .iter()
            .map(|r| OcrRead::new(r.text.clone(), r.conf, r.strip))
            .collect()
    }
}
