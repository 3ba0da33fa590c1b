//! Synthetic trajectories, plate rendering and the end-to-end pipeline.
//!
//! Randomness comes from ChaCha8 seeded with the scenario seed; frame `k`
//! draws truth noise from stream `2k` and rendering noise from stream
//! `2k + 1`, so logs reproduce across platforms and thread counts.

mod frames;
mod log;
mod pipeline;
mod render;
mod scenario;
mod trials;

pub use frames::{frame_truth, gen_frames, FrameTruth};
pub use log::{ErrorStats, FrameRecord, SessionLog, Summary, CSV_COLUMNS};
pub use pipeline::{
    design_pixels, identify_state, measure_frame, run_pipeline, true_spec, FrameMeasurement, PipelineConfig,
    ScaleParams, Toggles, OPTICAL_MIN_SAMPLES, OPTICAL_WINDOW,
};
pub use render::{
    render_plate, FRect, RenderParams, RenderedPlate, GLYPH_COUNT, GLYPH_WIDTH_FRAC, PLATE_HEIGHT_M, PLATE_WIDTH_M,
    SEGMENTATION_FLOOR_PX,
};
pub use scenario::{NoiseModel, Occlusion, OcrEntry, PoseSegment, Scenario, VelocitySegment};
pub use trials::{run_trials, trial_seed};
