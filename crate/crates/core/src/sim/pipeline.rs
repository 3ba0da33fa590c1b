use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frames::{frame_rng, gen_frames, FrameTruth};
use super::log::{FrameRecord, SessionLog};
use super::render::{render_plate, RenderParams};
use super::Scenario;
use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::pose::{compensated_distance, correct_height, measure_pose, LineSegment, PoseSmoother};
use crate::range::{feature_estimates, fuse_features, pinhole, InflationParams, Measurements};
use crate::segment::{mean_height, segment_plate, spacing, stroke_width, SegmentOptions};
use crate::state_id::{decide, hsv_scores, match_markers, DesignCatalog, Hsv, MarkerCatalog, StateDecision};
use crate::track::{
    deep_metric, fuse_geo_deep, optical_cross_check, step_with_r, warning_level, Estimate, KalmanParams,
    ScaleTracker, TrackState,
};
use crate::typography::{StateSpec, StateTable, DEFAULT_STATE_ID};

/// Frames of corrected character height used by the optical-expansion check.
pub const OPTICAL_WINDOW: usize = 3;
/// Fewest samples before the optical check is trusted.
pub const OPTICAL_MIN_SAMPLES: usize = 3;
/// Synthetic plate-background pixels fed to colour scoring.
const HSV_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Toggles {
    pub pose: bool,
    pub deep: bool,
    pub kalman: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            pose: true,
            deep: true,
            kalman: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleParams {
    pub s0: f64,
    pub alpha: f64,
    pub window: usize,
}

impl Default for ScaleParams {
    fn default() -> Self {
        ScaleParams {
            s0: 1.0,
            alpha: 0.9,
            window: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub camera: CameraModel,
    pub states: StateTable,
    pub markers: MarkerCatalog,
    pub designs: DesignCatalog,
    pub toggles: Toggles,
    pub kalman: KalmanParams,
    pub scale: ScaleParams,
    pub inflation: InflationParams,
    pub render: RenderParams,
    pub segment: SegmentOptions,
    /// On an optical inconsistency, overwrite the filter velocity with the
    /// optical estimate instead of inflating the next measurement variance.
    pub optical_fallback: bool,
    /// Range against this state's typography regardless of identification.
    pub state_override: Option<String>,
}

impl PipelineConfig {
    pub fn new(camera: CameraModel) -> Self {
        PipelineConfig {
            camera,
            states: StateTable::builtin(),
            markers: MarkerCatalog::builtin(),
            designs: DesignCatalog::builtin(),
            toggles: Toggles::default(),
            kalman: KalmanParams::default(),
            scale: ScaleParams::default(),
            inflation: InflationParams::default(),
            render: RenderParams::default(),
            segment: SegmentOptions::default(),
            optical_fallback: false,
            state_override: None,
        }
    }

    /// Typography used for ranging plus the identification that chose it.
    pub fn ranging_spec(&self, sc: &Scenario) -> Result<(StateSpec, StateDecision)> {
        let decision = identify_state(sc, &self.markers, &self.designs)?;
        let spec = match &self.state_override {
            Some(id) if id.eq_ignore_ascii_case(DEFAULT_STATE_ID) => self.states.default_spec().clone(),
            Some(id) => self
                .states
                .get(id)
                .cloned()
                .ok_or_else(|| Error::Config(format!("unknown state override {id:?}")))?,
            None => self.states.lookup_height(Some(&decision)).clone(),
        };
        Ok((spec, decision))
    }
}

/// Typography that physically printed the plate.
pub fn true_spec(sc: &Scenario, states: &StateTable) -> StateSpec {
    states.get(&sc.state).unwrap_or(states.default_spec()).clone()
}

/// Background pixels of the scenario state's designs, split by design
/// weight and taken at the centre of each HSV range. States without a design
/// get plain white.
pub fn design_pixels(state: &str, designs: &DesignCatalog) -> Vec<Hsv> {
    let own: Vec<_> = designs
        .designs
        .iter()
        .filter(|d| d.state_id.eq_ignore_ascii_case(state) && !d.ranges.is_empty())
        .collect();
    let total: f64 = own.iter().map(|d| d.weight).sum();
    if own.is_empty() || !(total > 0.0) {
        return vec![Hsv::new(0.0, 0.0, 0.95); HSV_SAMPLES];
    }
    let mut px = Vec::with_capacity(HSV_SAMPLES);
    for d in &own {
        let n = (HSV_SAMPLES as f64 * d.weight / total).round() as usize;
        let r = &d.ranges[0];
        let h = if r.h_min <= r.h_max {
            0.5 * (r.h_min + r.h_max)
        } else {
            (0.5 * (r.h_min + r.h_max + 360.0)) % 360.0
        };
        px.extend(std::iter::repeat_n(Hsv::new(h, 0.5 * (r.s_min + r.s_max), 0.5 * (r.v_min + r.v_max)), n));
    }
    px
}

/// Staged identification from the scenario's OCR text and plate colours.
pub fn identify_state(sc: &Scenario, markers: &MarkerCatalog, designs: &DesignCatalog) -> Result<StateDecision> {
    let stage1 = match_markers(&sc.ocr_reads(), markers);
    let stage2 = hsv_scores(&design_pixels(&sc.state, designs), designs)?;
    Ok(decide(stage1, &stage2, None))
}

/// Per-frame image measurements; independent across frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameMeasurement {
    pub h_bar: Option<f64>,
    pub s_bar: Option<f64>,
    pub g_bar: Option<f64>,
    pub char_heights: Vec<f64>,
    pub below_floor: bool,
    pub seg_failed: bool,
    /// Vanishing-point row and lane segments observed this frame.
    pub v_inf: Option<f64>,
    pub lanes: Vec<LineSegment>,
}

/// Renders and measures the plate of one frame.
pub fn measure_frame(
    truth: &FrameTruth,
    sc: &Scenario,
    spec: &StateSpec,
    cfg: &PipelineConfig,
) -> Result<FrameMeasurement> {
    let cam = &cfg.camera;
    let mut m = FrameMeasurement {
        v_inf: Some(cam.height_px as f64 / 2.0 + cam.f_px * truth.pitch.tan()),
        ..Default::default()
    };
    let slope = truth.roll.tan();
    for y in [0.7, 0.85] {
        let y0 = y * cam.height_px as f64;
        m.lanes.push(LineSegment::new(0.0, y0, 100.0, y0 + 100.0 * slope)?);
    }
    if truth.occluded {
        return Ok(m);
    }
    let mut rng = frame_rng(sc.seed, truth.frame, true);
    let params = RenderParams {
        intensity_noise: sc.noise.intensity,
        char_height_jitter: sc.noise.char_height_px,
        ..cfg.render
    };
    let plate = render_plate(spec, cam.f_px, truth.d_true, (truth.pitch, truth.roll), &params, &mut rng)?;
    m.below_floor = plate.below_floor;
    match segment_plate(&plate.image, cfg.segment) {
        Ok(seg) => {
            m.h_bar = Some(mean_height(&seg.chars));
            m.s_bar = stroke_width(&seg.otsu_mask, &seg.chars).ok();
            m.g_bar = Some(spacing(&seg.chars)).filter(|g| *g > 0.0);
            m.char_heights = seg.chars.heights;
        }
        Err(_) => m.seg_failed = true,
    }
    Ok(m)
}

/// Runs the full pipeline over a scenario. Image measurement is parallel;
/// everything with temporal state runs in frame order. Stage failures show
/// up as empty fields and flags, never as an aborted run.
pub fn run_pipeline(sc: &Scenario, cfg: &PipelineConfig) -> Result<SessionLog> {
    cfg.camera.validate()?;
    let printed = true_spec(sc, &cfg.states);
    let (spec, decision) = cfg.ranging_spec(sc)?;
    let truths = gen_frames(sc, &cfg.camera, &printed)?;
    let measurements: Vec<FrameMeasurement> = truths
        .par_iter()
        .map(|t| measure_frame(t, sc, &printed, cfg))
        .collect::<Result<_>>()?;

    let mut seq = Sequencer::new(sc, cfg, &spec);
    let records = truths
        .iter()
        .zip(&measurements)
        .map(|(t, m)| seq.step(t, m))
        .collect();
    Ok(SessionLog {
        scenario: sc.clone(),
        toggles: cfg.toggles,
        camera: cfg.camera,
        decision,
        ranging_state: spec.state_id.clone(),
        ranging_height_m: spec.char_height_m,
        records,
    })
}

/// Temporal half of the pipeline.
struct Sequencer<'a> {
    cfg: &'a PipelineConfig,
    spec: &'a StateSpec,
    dt: f64,
    pose: PoseSmoother,
    scale: ScaleTracker,
    track: TrackState,
    heights: VecDeque<(f64, f64)>,
    inflate_next: bool,
    prev_fused: Option<f64>,
    prev_geo: Option<f64>,
}

impl<'a> Sequencer<'a> {
    fn new(sc: &Scenario, cfg: &'a PipelineConfig, spec: &'a StateSpec) -> Self {
        Sequencer {
            cfg,
            spec,
            dt: sc.dt(),
            pose: PoseSmoother::new(),
            scale: ScaleTracker::new(cfg.scale.s0, cfg.scale.alpha, cfg.scale.window),
            track: TrackState::new(sc.dt(), cfg.kalman),
            heights: VecDeque::with_capacity(OPTICAL_WINDOW),
            inflate_next: false,
            prev_fused: None,
            prev_geo: None,
        }
    }

    fn step(&mut self, truth: &FrameTruth, m: &FrameMeasurement) -> FrameRecord {
        let cfg = self.cfg;
        let f = cfg.camera.f_px;
        let mut rec = FrameRecord::new(truth);
        rec.char_heights = m.char_heights.clone();
        if truth.occluded {
            rec.flag("occluded");
        }
        if m.below_floor {
            rec.flag("below_floor");
        }
        if m.seg_failed {
            rec.flag("segmentation_failed");
        }

        let pose = if cfg.toggles.pose {
            let (phi, psi) = measure_pose(m.v_inf, &m.lanes, cfg.camera.height_px as f64, f);
            self.pose.update(phi, psi)
        } else {
            crate::pose::PoseEstimate::zero()
        };
        rec.pitch = pose.phi;
        rec.roll = pose.psi;

        rec.h_bar = m.h_bar;
        let h_corr = m.h_bar.map(|h| correct_height(h, &pose));
        rec.d_height = m
            .h_bar
            .and_then(|h| compensated_distance(f, self.spec.char_height_m, h, &pose).ok());

        // geometric branch
        let geo = h_corr.and_then(|h| {
            let d_prior = if self.track.is_initialized() {
                self.track.distance()
            } else {
                self.prev_geo.or_else(|| pinhole(f, self.spec.char_height_m, h).ok())?
            };
            let ms = Measurements {
                h_bar: Some(h),
                s_bar: m.s_bar,
                g_bar: m.g_bar,
            };
            let ests = feature_estimates(f, self.spec, &ms, d_prior.max(f64::MIN_POSITIVE), cfg.inflation).ok()?;
            let (d, sigma) = fuse_features(&ests).ok()?;
            Some(Estimate::new(d, sigma * sigma))
        });
        rec.d_geo = geo.map(|e| e.d);
        if geo.is_some() {
            self.prev_geo = rec.d_geo;
        }

        // deep branch: the scale only moves while the plate is measured
        let deep = if cfg.toggles.deep {
            if let Some(g) = geo {
                if self.scale.update(g.d, truth.d_plate).is_err() {
                    rec.flag("scale_update_failed");
                }
            } else {
                rec.flag("scale_hold");
            }
            deep_metric(&self.scale, truth.d_plate)
                .ok()
                .filter(|d| d.is_finite() && *d > 0.0)
                .map(|d| Estimate::new(d, self.scale.deep_variance(truth.d_plate)))
        } else {
            None
        };
        rec.scale = cfg.toggles.deep.then(|| self.scale.scale());
        rec.d_deep = deep.map(|e| e.d);

        let fused = fuse_geo_deep(geo, deep).ok();
        rec.d_fused = fused.map(|e| e.d);
        if fused.is_none() {
            rec.flag("no_measurement");
        }

        if cfg.toggles.kalman {
            let r = if self.inflate_next {
                cfg.kalman.r * cfg.kalman.r_inflation
            } else {
                cfg.kalman.r
            };
            self.inflate_next = false;
            self.track = step_with_r(&self.track, rec.d_fused, r);
            if self.track.is_initialized() {
                if let Some(h) = h_corr {
                    if self.heights.len() == OPTICAL_WINDOW {
                        self.heights.pop_front();
                    }
                    self.heights.push_back((h, truth.t));
                }
                if self.heights.len() >= OPTICAL_MIN_SAMPLES && h_corr.is_some() {
                    let v_k = self.track.velocity();
                    let hist: Vec<(f64, f64)> = self.heights.iter().copied().collect();
                    if let Ok((v_opt, bad)) = optical_cross_check(self.track.distance(), &hist, v_k) {
                        if bad {
                            rec.flag("optical_inconsistent");
                            if cfg.optical_fallback {
                                self.track.x[1] = v_opt;
                            } else {
                                self.inflate_next = true;
                            }
                        }
                    }
                }
                rec.d_hat = Some(self.track.distance());
                rec.v_hat = Some(self.track.velocity());
            }
        } else {
            rec.d_hat = rec.d_fused;
            rec.v_hat = match (rec.d_fused, self.prev_fused) {
                (Some(a), Some(b)) => Some((a - b) / self.dt),
                _ => None,
            };
        }
        if rec.d_fused.is_some() {
            self.prev_fused = rec.d_fused;
        }
        if let (Some(d), Some(v)) = (rec.d_hat, rec.v_hat) {
            rec.ttc = crate::track::ttc(d, v);
            rec.level = Some(warning_level(rec.ttc, v));
        }
        rec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::LensPreset;
    use crate::sim::Occlusion;
    use crate::state_id::DecisionStage;

    fn cfg() -> PipelineConfig {
        PipelineConfig::new(LensPreset::by_name("040H").unwrap().full_resolution())
    }

    #[test]
    fn michigan_text_selects_michigan_height() {
        let sc = Scenario::static_at(10.0, 1.0, 1);
        let (spec, d) = cfg().ranging_spec(&sc).unwrap();
        assert_eq!(d.stage, DecisionStage::Text);
        assert_eq!(spec.char_height_m, 0.072);
    }

    #[test]
    fn colour_alone_identifies_a_boosted_design() {
        let mut sc = Scenario::static_at(10.0, 1.0, 1);
        sc.ocr.clear();
        sc.state = "NJ".into();
        let d = identify_state(&sc, &MarkerCatalog::builtin(), &DesignCatalog::builtin()).unwrap();
        assert_eq!((d.state_id.as_str(), d.stage), ("NJ", DecisionStage::Color));
    }

    #[test]
    fn override_to_default_height() {
        let mut c = cfg();
        c.state_override = Some("default".into());
        let (spec, _) = c.ranging_spec(&Scenario::static_at(10.0, 1.0, 1)).unwrap();
        assert_eq!(spec.char_height_m, 0.0651);
        c.state_override = Some("ZZ".into());
        assert!(c.ranging_spec(&Scenario::static_at(10.0, 1.0, 1)).is_err());
    }

    #[test]
    fn noiseless_static_geo_is_within_half_percent() {
        let mut sc = Scenario::static_at(10.0, 0.4, 3);
        sc.noise.intensity = 0.0;
        let log = run_pipeline(&sc, &cfg()).unwrap();
        for r in &log.records {
            let e = r.d_geo.unwrap() / r.d_true - 1.0;
            assert!(e.abs() < 0.005, "frame {}: {e}", r.frame);
        }
    }

    #[test]
    fn occluded_frames_keep_fused_output() {
        let mut sc = Scenario::static_at(10.0, 3.0, 4);
        sc.noise.depth = 0.05;
        sc.occlusion = vec![Occlusion { start_s: 2.0, len_s: 0.5 }];
        let log = run_pipeline(&sc, &cfg()).unwrap();
        let occ: Vec<_> = log.records.iter().filter(|r| r.occluded).collect();
        assert_eq!(occ.len(), 13);
        assert!(occ.iter().all(|r| r.d_geo.is_none() && r.d_fused.is_some()));
        let s0 = occ[0].scale.unwrap();
        assert!(occ.iter().all(|r| r.scale.unwrap().to_bits() == s0.to_bits()));
    }

    #[test]
    fn runs_are_bit_identical() {
        let mut sc = Scenario::static_at(8.0, 0.6, 11);
        sc.noise.char_height_px = 1.0;
        sc.noise.depth = 0.02;
        let a = run_pipeline(&sc, &cfg()).unwrap();
        let b = run_pipeline(&sc, &cfg()).unwrap();
        assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    }

    #[test]
    fn toggles_change_outputs() {
        let mut sc = Scenario::static_at(10.0, 1.0, 5);
        sc.noise.char_height_px = 2.0;
        let mut c = cfg();
        let on = run_pipeline(&sc, &c).unwrap();
        c.toggles.kalman = false;
        let off = run_pipeline(&sc, &c).unwrap();
        assert!(off.records.iter().all(|r| r.d_hat == r.d_fused));
        assert_ne!(on.summary().smoothed_std, off.summary().smoothed_std);
        c.toggles.deep = false;
        let geo_only = run_pipeline(&sc, &c).unwrap();
        assert!(geo_only.records.iter().all(|r| r.d_deep.is_none() && r.d_fused == r.d_geo));
    }
}
