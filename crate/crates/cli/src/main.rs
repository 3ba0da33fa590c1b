//! `plate-ranging` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
//! Every file the tool writes goes under the output directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use plate_ranging::camera::{calibrate_focal, parse_calibration_samples, CameraModel};
use plate_ranging::config::RunConfig;
use plate_ranging::pose::{compensated_distance, correct_height, PoseEstimate};
use plate_ranging::range::{error_budget, feature_estimates, fuse_features, FeatureEstimate, Measurements};
use plate_ranging::raster::pgm;
use plate_ranging::segment::{mean_height, segment_plate, spacing, stroke_width, CharSet, SegmentOptions};
use plate_ranging::sim::{run_pipeline, run_trials, Summary};
use plate_ranging::typography::{StateTable, TypographyFractions};

#[derive(Parser)]
#[command(name = "plate-ranging", version, about = "Monocular ranging from license-plate typography")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Focal length from plates at known distances (median of candidates).
    Calibrate(CalibrateArgs),
    /// Run a synthetic scenario through the full pipeline.
    Simulate(SimulateArgs),
    /// Linear and root-sum-square totals of the relative error terms.
    Budget(BudgetArgs),
    /// Segment the characters of one plate image (binary PGM).
    Segment(SegmentArgs),
    /// Distance to one plate image (binary PGM).
    Range(RangeArgs),
}

#[derive(Args)]
struct CalibrateArgs {
    /// Whitespace-separated rows `D_ref_m h_bar_px H_s_m`, optional header.
    samples: PathBuf,
    /// Image width of the calibration captures.
    #[arg(long, default_value_t = 2880)]
    width_px: u32,
    #[arg(long, default_value_t = 1860)]
    height_px: u32,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run configuration (TOML). Defaults plus PLATERANGE_* variables otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario file; overrides the config entry.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory; overrides the config entry (default `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Replaces the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_kalman: bool,
    #[arg(long)]
    no_deep: bool,
    #[arg(long)]
    no_pose: bool,
    /// Monte-Carlo trials; more than one writes per-trial summaries instead of a CSV.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct BudgetArgs {
    /// Relative focal-length error.
    #[arg(long, default_value_t = 0.015, allow_negative_numbers = true)]
    focal: f64,
    /// Relative error of the assumed character height.
    #[arg(long, default_value_t = 0.023, allow_negative_numbers = true)]
    char_height: f64,
    /// Relative error of the measured pixel height.
    #[arg(long, default_value_t = 0.026, allow_negative_numbers = true)]
    measurement: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pitch: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    roll: f64,
}

#[derive(Args)]
struct SegmentArgs {
    plate: PathBuf,
    /// Fixed upscale factor instead of the automatic one.
    #[arg(long)]
    upscale: Option<f64>,
    /// Report bounding-box heights instead of sub-pixel heights.
    #[arg(long)]
    bbox_heights: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RangeArgs {
    plate: PathBuf,
    /// Camera file (TOML with f_px, width_px, height_px); 040H preset otherwise.
    #[arg(long)]
    camera: Option<PathBuf>,
    /// Lens preset used when no camera file is given.
    #[arg(long, default_value = "040H")]
    lens: String,
    /// Jurisdiction code; the default height is used when absent.
    #[arg(long)]
    state: Option<String>,
    /// State table (TSV); the built-in table otherwise.
    #[arg(long)]
    state_table: Option<PathBuf>,
    /// Camera pitch in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pitch: f64,
    /// Camera roll in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    roll: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

/// Marks an error as a usage problem (exit 2).
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use plate_ranging::Error as E;
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config(_) | E::Parse { .. } | E::InvalidArgument(_) => 2,
                _ => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Calibrate(a) => calibrate(a),
        Cmd::Simulate(a) => simulate(a),
        Cmd::Budget(a) => budget(a),
        Cmd::Segment(a) => segment(a),
        Cmd::Range(a) => range(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("no such file: {}", path.display())))
    }
}

fn read_input(path: &Path) -> Result<String> {
    require_file(path)?;
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = out_path(dir, name)?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let samples = parse_calibration_samples(&read_input(&a.samples)?)
        .with_context(|| format!("{}", a.samples.display()))?;
    if samples.is_empty() {
        return Err(usage(format!("{}: no samples", a.samples.display())));
    }
    println!("{:>10} {:>10} {:>8} {:>12}", "D_ref_m", "h_bar_px", "H_s_m", "f_px");
    for s in &samples {
        println!("{:>10} {:>10} {:>8} {:>12.3}", s.d_ref, s.h_bar, s.h_s, s.candidate_focal()?);
    }
    let f = calibrate_focal(&samples)?;
    println!("median f_px = {f:.3}");
    let cam = CameraModel::new(f, a.width_px, a.height_px)?;
    let path = out_path(&a.out_dir, "camera.toml")?;
    cam.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct TrialsReport<'a> {
    master_seed: u64,
    trials: &'a [Summary],
}

fn simulate(a: SimulateArgs) -> Result<()> {
    if a.trials == 0 || a.jobs == 0 {
        return Err(usage("--trials and --jobs must be at least 1"));
    }
    let mut cfg = match &a.config {
        Some(p) => {
            require_file(p)?;
            RunConfig::load(p)?
        }
        None => RunConfig::from_env()?,
    };
    if let Some(s) = a.scenario {
        cfg.scenario = Some(s);
    }
    if let Some(d) = a.out_dir {
        cfg.out_dir = d;
    }
    if a.seed.is_some() {
        cfg.seed = a.seed;
    }
    cfg.toggles.kalman &= !a.no_kalman;
    cfg.toggles.deep &= !a.no_deep;
    cfg.toggles.pose &= !a.no_pose;

    let pipeline = cfg.pipeline()?;
    let sc = cfg
        .load_scenario()?
        .ok_or_else(|| usage("no scenario: pass --scenario or set it in the config"))?;
    let out = &cfg.out_dir;

    if a.trials > 1 {
        let summaries = run_trials(&sc, &pipeline, a.trials, a.jobs)?;
        let report = TrialsReport {
            master_seed: sc.seed,
            trials: &summaries,
        };
        let path = write_out(out, "trials.json", &serde_json::to_string_pretty(&report)?)?;
        print_trials(&summaries);
        println!("wrote {}", path.display());
        return Ok(());
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let log = pool.install(|| run_pipeline(&sc, &pipeline))?;
    let summary = log.summary();
    let csv = out_path(out, "session.csv")?;
    log.write_csv(&csv)?;
    let meta = out_path(out, "session.meta.json")?;
    log.write_meta(&meta)?;
    let sum = write_out(out, "summary.json", &serde_json::to_string_pretty(&summary)?)?;
    println!(
        "state {} ({:?}, confidence {:.2}), H_s = {} m",
        log.ranging_state, log.decision.stage, log.decision.confidence, log.ranging_height_m
    );
    print_summary(&summary);
    for p in [csv, meta, sum] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn print_summary(s: &Summary) {
    println!("frames {} (occluded {})", s.frames, s.occluded_frames);
    println!("{:<10} {:>7} {:>9} {:>8} {:>8} {:>8}", "estimate", "frames", "MAE_m", "MAE_%", "RMSE_m", "std_m");
    for (name, e) in [("geo", s.geo), ("fused", s.fused), ("smoothed", s.smoothed)] {
        println!(
            "{:<10} {:>7} {:>9.4} {:>8.3} {:>8.4} {:>8.4}",
            name,
            e.frames,
            e.mae_m,
            100.0 * e.mae_rel,
            e.rmse_m,
            e.std_m
        );
    }
    println!("std raw {:.4} m, smoothed {:.4} m", s.raw_std, s.smoothed_std);
    println!(
        "coverage {:.1}%, occlusion coverage {:.1}%, velocity error std {:.3} m/s",
        100.0 * s.coverage,
        100.0 * s.occlusion_coverage,
        s.velocity_error_std
    );
}

fn print_trials(all: &[Summary]) {
    let stat = |get: fn(&Summary) -> f64| {
        let n = all.len() as f64;
        let m = all.iter().map(get).sum::<f64>() / n;
        let v = all.iter().map(|s| (get(s) - m).powi(2)).sum::<f64>() / n;
        (m, v.sqrt())
    };
    println!("{} trials, mean ± std across trials", all.len());
    type Column = (&'static str, fn(&Summary) -> f64);
    let rows: [Column; 5] = [
        ("geo MAE %", |s| 100.0 * s.geo.mae_rel),
        ("fused MAE %", |s| 100.0 * s.fused.mae_rel),
        ("smoothed MAE %", |s| 100.0 * s.smoothed.mae_rel),
        ("smoothed std m", |s| s.smoothed_std),
        ("occlusion coverage %", |s| 100.0 * s.occlusion_coverage),
    ];
    for (name, get) in rows {
        let (m, sd) = stat(get);
        println!("{name:<22} {m:>9.4} ± {sd:.4}");
    }
}

/// `x` with four significant digits.
fn sig4(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let decimals = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn budget(a: BudgetArgs) -> Result<()> {
    let terms = [
        ("--focal", a.focal),
        ("--char-height", a.char_height),
        ("--measurement", a.measurement),
        ("--pitch", a.pitch),
        ("--roll", a.roll),
    ];
    for (flag, v) in terms {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(usage(format!("{flag} must be a finite non-negative number, got {v}")));
        }
    }
    let b = error_budget(a.focal, a.char_height, a.measurement, a.pitch, a.roll)?;
    println!("linear {}%", sig4(100.0 * b.linear_total));
    println!("rss {}%", sig4(100.0 * b.rss_total));
    Ok(())
}

fn load_plate(path: &Path) -> Result<plate_ranging::raster::GrayRaster> {
    require_file(path)?;
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    pgm::decode(&bytes).with_context(|| format!("{}", path.display()))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plate".into())
}

fn segment(a: SegmentArgs) -> Result<()> {
    if let Some(u) = a.upscale {
        if !(u >= 1.0 && u.is_finite()) {
            return Err(usage(format!("--upscale must be >= 1, got {u}")));
        }
    }
    let plate = load_plate(&a.plate)?;
    let opts = SegmentOptions {
        upscale: a.upscale,
        bbox_heights: a.bbox_heights,
    };
    let seg = segment_plate(&plate, opts)?;
    let json = serde_json::to_string_pretty(&seg.chars)?;
    println!("{json}");
    let path = write_out(&a.out_dir, &format!("{}.chars.json", file_stem(&a.plate)), &json)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct RangeReport {
    state: String,
    char_height_m: f64,
    f_px: f64,
    pitch: f64,
    roll: f64,
    h_bar: f64,
    s_bar: Option<f64>,
    g_bar: Option<f64>,
    /// Pose-compensated height-only distance.
    d_height: f64,
    estimates: Vec<FeatureEstimate>,
    d_fused: f64,
    sigma: f64,
    chars: CharSet,
}

fn range(a: RangeArgs) -> Result<()> {
    let cam = match &a.camera {
        Some(p) => {
            require_file(p)?;
            CameraModel::load(p)?
        }
        None => {
            let mut cfg = RunConfig::default();
            cfg.camera.lens = Some(a.lens.clone());
            cfg.camera.resolve()?
        }
    };
    let table = match &a.state_table {
        Some(p) => {
            require_file(p)?;
            StateTable::load(p, TypographyFractions::default())?
        }
        None => StateTable::builtin(),
    };
    let spec = match &a.state {
        Some(s) => table
            .get(s)
            .ok_or_else(|| usage(format!("state {s:?} is not in the state table")))?,
        None => table.default_spec(),
    };
    let pose = PoseEstimate::new(a.pitch, a.roll);
    if pose.foreshortening().partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(usage("pitch and roll must be within ±90°"));
    }

    let plate = load_plate(&a.plate)?;
    let seg = segment_plate(&plate, SegmentOptions::default())?;
    let h_bar = mean_height(&seg.chars);
    let f = cam.f_px;
    let d_height = compensated_distance(f, spec.char_height_m, h_bar, &pose)?;
    let m = Measurements {
        h_bar: Some(correct_height(h_bar, &pose)),
        s_bar: stroke_width(&seg.otsu_mask, &seg.chars).ok(),
        g_bar: Some(spacing(&seg.chars)).filter(|g| *g > 0.0),
    };
    let estimates = feature_estimates(f, spec, &m, d_height, Default::default())?;
    let (d_fused, sigma) = fuse_features(&estimates)?;
    let report = RangeReport {
        state: spec.state_id.clone(),
        char_height_m: spec.char_height_m,
        f_px: f,
        pitch: pose.phi,
        roll: pose.psi,
        h_bar,
        s_bar: m.s_bar,
        g_bar: m.g_bar,
        d_height,
        estimates,
        d_fused,
        sigma,
        chars: seg.chars,
    };
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    let path = write_out(&a.out_dir, &format!("{}.range.json", file_stem(&a.plate)), &json)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(6.4), "6.400");
        assert_eq!(sig4(3.781534), "3.782");
        assert_eq!(sig4(12.3456), "12.35");
        assert_eq!(sig4(0.0920), "0.09200");
        assert_eq!(sig4(0.0), "0");
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let cfg: anyhow::Error = plate_ranging::Error::Config("x".into()).into();
        assert_eq!(exit_code(&cfg), 2);
        assert_eq!(exit_code(&usage("x")), 2);
        let seg: anyhow::Error = plate_ranging::Error::SegmentationFailure { survivors: 1 }.into();
        assert_eq!(exit_code(&seg.context("segmenting")), 3);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
