//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;
use std::path::PathBuf;
use std::time::Instant;

use plate_ranging::camera::LensPreset;
use plate_ranging::detect::{advance_mode, DetectorMode, Mode};
use plate_ranging::pose::PoseEstimate;
use plate_ranging::range::{error_budget, pinhole, project};
use plate_ranging::raster::{components, distance_transform, otsu_threshold, BinaryRaster, GrayRaster};
use plate_ranging::sim::{run_pipeline, PipelineConfig, Scenario, SessionLog};
use plate_ranging::state_id::{decide, hsv_scores, DecisionStage, DesignCatalog, Hsv};
use plate_ranging::track::{fuse_geo_deep, kalman_step, Estimate, KalmanParams, ScaleTracker, TrackState, WarningLevel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn config() -> PipelineConfig {
    PipelineConfig::new(LensPreset::by_name("040H").unwrap().full_resolution())
}

fn run(sc: &Scenario, cfg: &PipelineConfig) -> Result<SessionLog, String> {
    run_pipeline(sc, cfg).map_err(|e| e.to_string())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

fn c1_error_budget() -> Outcome {
    let b = error_budget(0.015, 0.023, 0.026, 0.0, 0.0).map_err(|e| e.to_string())?;
    let detail = format!("linear {:.4}%, rss {:.4}%", 100.0 * b.linear_total, 100.0 * b.rss_total);
    check(
        (b.linear_total - 0.064).abs() < 1e-12 && (b.rss_total - 0.0380).abs() <= 0.0001,
        detail,
    )
}

fn c2_pinhole_anchor() -> Outcome {
    let h = project(3967.0, 0.072, 10.0);
    let d = pinhole(3967.0, 0.072, 28.56).map_err(|e| e.to_string())?;
    check(
        (h - 28.56).abs() < 0.005 && (d / 10.0 - 1.0).abs() < 0.001,
        format!("h = {h:.4} px, D(28.56 px) = {d:.5} m"),
    )
}

fn static_logs() -> Result<(SessionLog, SessionLog, f64), String> {
    let sc = scenario("static_10m.toml");
    let t0 = Instant::now();
    let log = run(&sc, &config())?;
    let secs = t0.elapsed().as_secs_f64();
    let mut cfg = config();
    cfg.state_override = Some("DEFAULT".into());
    Ok((log, run(&sc, &cfg)?, secs))
}

fn c3_monte_carlo(log: &SessionLog, secs: f64) -> Outcome {
    let s = log.summary();
    check(
        log.records.len() == 1000 && s.geo.frames == 1000 && (0.018..=0.034).contains(&s.geo.mae_rel) && secs < 5.0,
        format!("{} frames, MAE {:.3}%, {secs:.2} s", s.geo.frames, 100.0 * s.geo.mae_rel),
    )
}

fn c4_default_height_bias(log: &SessionLog) -> Outcome {
    // how far the default-height range falls short of the truth, relative to the estimate
    let bias: Vec<f64> = log
        .records
        .iter()
        .filter_map(|r| r.d_geo.map(|d| r.d_true / d - 1.0))
        .collect();
    let b = mean(&bias);
    check(
        log.ranging_height_m == 0.0651 && (b - 0.106).abs() <= 0.01,
        format!("ranging height {} m, bias {:.2}%", log.ranging_height_m, 100.0 * b),
    )
}

fn c5_multi_char_variance(log: &SessionLog) -> Outcome {
    let f = log.camera.f_px;
    let h_s = log.ranging_height_m;
    let (mut single, mut multi) = (Vec::new(), Vec::new());
    for r in &log.records {
        if let (Some(h), Some(&h1)) = (r.h_bar, r.char_heights.first()) {
            single.push(f * h_s / h1);
            multi.push(f * h_s / h);
        }
    }
    let ratio = variance(&single) / variance(&multi);
    check((5.5..=8.5).contains(&ratio), format!("{} frames, ratio {ratio:.2}", single.len()))
}

fn c6_pose_round_trip() -> Outcome {
    let sc = scenario("pose_3deg.toml");
    let (phi, psi) = sc.pose_at(0.0);
    let on = run(&sc, &config())?;
    let mut cfg = config();
    cfg.toggles.pose = false;
    let off = run(&sc, &cfg)?;
    let k = PoseEstimate::new(phi, psi).foreshortening();
    let expected_bias = 1.0 / k - 1.0;
    let (mut worst_err, mut worst_bias) = (0.0f64, 0.0f64);
    for (a, b) in on.records.iter().zip(&off.records) {
        let (Some(dc), Some(du)) = (a.d_height, b.d_height) else {
            return Err(format!("frame {} lacks a height estimate", a.frame));
        };
        worst_err = worst_err.max((dc / a.d_true - 1.0).abs());
        worst_bias = worst_bias.max((du / dc - 1.0 - expected_bias).abs());
    }
    check(
        worst_err < 0.001 && worst_bias < 1e-12,
        format!(
            "max compensated error {:.4}%, uncompensated bias {:.4}% (deviation {worst_bias:.1e})",
            100.0 * worst_err,
            100.0 * expected_bias
        ),
    )
}

fn c7_ema_convergence() -> Outcome {
    let mut t = ScaleTracker::new(1.0, 0.9, 30);
    let mut worst = 0.0f64;
    for k in 1..=50 {
        t.update(0.7 * 12.0, 12.0).map_err(|e| e.to_string())?;
        let expected = 0.9f64.powi(k) * 0.3;
        worst = worst.max(((t.scale() - 0.7).abs() - expected).abs());
    }
    check(worst <= 1e-12, format!("max deviation {worst:.2e}"))
}

fn c8_occlusion() -> Outcome {
    let sc = scenario("occlusion_60s.toml");
    let log = run(&sc, &config())?;
    let s = log.summary();
    let recs = &log.records;
    let mut gaps = 0;
    for i in 1..recs.len() {
        if recs[i].occluded && !recs[i - 1].occluded {
            gaps += 1;
            let held = recs[i - 1].scale.ok_or("missing scale")?;
            let mut j = i;
            while j < recs.len() && recs[j].occluded {
                if recs[j].scale.map(f64::to_bits) != Some(held.to_bits()) {
                    return Err(format!("scale moved at occluded frame {j}"));
                }
                j += 1;
            }
        }
    }
    let ratio = s.fused_occluded.mae_m / s.fused_visible.mae_m;
    check(
        s.coverage == 1.0 && gaps == 12 && ratio <= 1.5,
        format!(
            "coverage {:.1}%, {gaps} gaps, occluded MAE {:.3} m vs visible {:.3} m (x{ratio:.2})",
            100.0 * s.coverage,
            s.fused_occluded.mae_m,
            s.fused_visible.mae_m
        ),
    )
}

fn c9_kalman_smoothing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut s = TrackState::new(0.04, KalmanParams::default());
    let (mut raw, mut smooth) = (Vec::new(), Vec::new());
    for k in 0..1000 {
        let z = 10.0 + noise.sample(&mut rng);
        s = kalman_step(&s, Some(z));
        if k >= 50 {
            raw.push(z);
            smooth.push(s.distance());
        }
    }
    let ratio = (variance(&smooth) / variance(&raw)).sqrt();
    check(ratio <= 0.55, format!("smoothed/raw std {ratio:.3}"))
}

fn c10_velocity_ttc() -> Outcome {
    let sc = scenario("approach.toml");
    let log = run(&sc, &config())?;
    // same burn-in as the smoothing criterion; v starts at zero
    let burn_in = 50;
    let s = log.summary_after(burn_in);
    let mut first_expected = None;
    let mut first_danger = None;
    for r in &log.records {
        let (Some(d), Some(v)) = (r.d_hat, r.v_hat) else { continue };
        let danger = r.level == Some(WarningLevel::Danger);
        if danger && v > -0.1 {
            return Err(format!("danger at frame {} with v = {v:.3}", r.frame));
        }
        let should = v < -0.1 && d / v.abs() < 1.0;
        if should && first_expected.is_none() {
            first_expected = Some(r.frame);
        }
        if danger && first_danger.is_none() {
            first_danger = Some(r.frame);
        }
        if danger != should {
            return Err(format!("frame {}: danger {danger}, D/|v| = {:.3}", r.frame, d / v.abs()));
        }
    }
    check(
        s.velocity_error_std <= 0.2 && first_expected.is_some() && first_danger == first_expected,
        format!(
            "v error std {:.3} m/s, first danger frame {:?} (expected {:?})",
            s.velocity_error_std, first_danger, first_expected
        ),
    )
}

/// Exhaustive Otsu: every cut, exact between-class variance comparison,
/// lowest cut wins ties.
fn otsu_oracle(px: &[u8]) -> Option<u8> {
    let mut best: Option<(u8, u128, u128)> = None;
    for t in 0..=255u8 {
        let dark: Vec<u64> = px.iter().filter(|&&v| v <= t).map(|&v| v as u64).collect();
        let light: Vec<u64> = px.iter().filter(|&&v| v > t).map(|&v| v as u64).collect();
        if dark.is_empty() || light.is_empty() {
            continue;
        }
        let (n0, n1) = (dark.len() as i128, light.len() as i128);
        let (s0, s1) = (dark.iter().sum::<u64>() as i128, light.iter().sum::<u64>() as i128);
        // proportional to n0 n1 (mu0 - mu1)^2
        let num = ((n1 * s0 - n0 * s1) * (n1 * s0 - n0 * s1)) as u128;
        let den = (n0 * n1) as u128;
        if best.is_none_or(|(_, bn, bd)| num * bd > bn * den) {
            best = Some((t, num, den));
        }
    }
    best.map(|b| b.0)
}

/// Chamfer 3-4 distance to the nearest background pixel by Dijkstra over
/// the raster padded with one ring of background.
fn chamfer_oracle(m: &BinaryRaster) -> Vec<u32> {
    let (w, h) = (m.width() as i64 + 2, m.height() as i64 + 2);
    let fg = |x: i64, y: i64| x >= 1 && y >= 1 && x < w - 1 && y < h - 1 && m.get(x as usize - 1, y as usize - 1);
    let mut dist = vec![u32::MAX; (w * h) as usize];
    let mut heap = BinaryHeap::new();
    for y in 0..h {
        for x in 0..w {
            if !fg(x, y) {
                dist[(y * w + x) as usize] = 0;
                heap.push(Reverse((0u32, x, y)));
            }
        }
    }
    while let Some(Reverse((d, x, y))) = heap.pop() {
        if d > dist[(y * w + x) as usize] {
            continue;
        }
        for (dx, dy) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let nd = d + if dx == 0 || dy == 0 { 3 } else { 4 };
            let i = (ny * w + nx) as usize;
            if nd < dist[i] {
                dist[i] = nd;
                heap.push(Reverse((nd, nx, ny)));
            }
        }
    }
    let mut out = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            out.push(dist[(y * w + x) as usize]);
        }
    }
    out
}

fn partition_holds(m: &BinaryRaster) -> bool {
    let regions = components(m);
    let mut label = vec![usize::MAX; m.width() * m.height()];
    for (k, r) in regions.iter().enumerate() {
        if r.area != r.pixels.len() {
            return false;
        }
        for &(x, y) in &r.pixels {
            let i = y * m.width() + x;
            if !m.get(x, y) || label[i] != usize::MAX {
                return false;
            }
            label[i] = k;
        }
    }
    // covers the foreground, and 8-neighbours always share a label
    for y in 0..m.height() {
        for x in 0..m.width() {
            let l = label[y * m.width() + x];
            if m.get(x, y) != (l != usize::MAX) {
                return false;
            }
            if l == usize::MAX {
                continue;
            }
            for (dx, dy) in [(1isize, 0isize), (-1, 1), (0, 1), (1, 1)] {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= m.width() as isize || ny >= m.height() as isize {
                    continue;
                }
                let nl = label[ny as usize * m.width() + nx as usize];
                if nl != usize::MAX && nl != l {
                    return false;
                }
            }
        }
    }
    // each region is internally connected: flood from its first pixel
    regions.iter().all(|r| {
        let set: std::collections::HashSet<_> = r.pixels.iter().copied().collect();
        let mut seen = std::collections::HashSet::from([r.pixels[0]]);
        let mut stack = vec![r.pixels[0]];
        while let Some((x, y)) = stack.pop() {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let p = ((x as isize + dx) as usize, (y as isize + dy) as usize);
                    if set.contains(&p) && seen.insert(p) {
                        stack.push(p);
                    }
                }
            }
        }
        seen.len() == set.len()
    })
}

fn c11_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..200 {
        // a few distinct levels make ties likely
        let levels: Vec<u8> = (0..rng.random_range(1..=6)).map(|_| rng.random()).collect();
        let px: Vec<u8> = (0..64).map(|_| levels[rng.random_range(0..levels.len())]).collect();
        let img = GrayRaster::new(8, 8, px.clone()).unwrap();
        if otsu_threshold(&img) != otsu_oracle(&px) {
            return Err(format!("otsu mismatch on raster {k}"));
        }
    }
    for k in 0..100 {
        let density = rng.random_range(0.2..0.95);
        let bits: Vec<bool> = (0..256).map(|_| rng.random_bool(density)).collect();
        let m = BinaryRaster::new(16, 16, bits).unwrap();
        let dt = distance_transform(&m);
        let oracle = chamfer_oracle(&m);
        for y in 0..16 {
            for x in 0..16 {
                if dt.raw(x, y) != oracle[y * 16 + x] {
                    return Err(format!("distance mismatch on raster {k} at ({x},{y})"));
                }
            }
        }
        if !partition_holds(&m) {
            return Err(format!("component partition broken on raster {k}"));
        }
    }
    Ok("200 Otsu rasters, 100 distance/component rasters".into())
}

fn c12_detector_fsm() -> Outcome {
    for bits in 0u32..(1 << 12) {
        let mut m = DetectorMode::default();
        for i in 0..12 {
            m = advance_mode(m, bits >> i & 1 == 1);
        }
        // bit i set = detection at step i; count misses from the end
        let trailing = (0..12).rev().take_while(|&i| bits >> i & 1 == 0).count();
        if (m.mode == Mode::Permissive) != (trailing >= 8) {
            return Err(format!("sequence {bits:012b}: {:?} after {trailing} trailing misses", m.mode));
        }
    }
    Ok("4096 sequences".into())
}

fn c13_fusion_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for k in 0..10_000 {
        let g = Estimate::new(rng.random_range(0.5..80.0), rng.random_range(1e-4..20.0));
        let d = Estimate::new(rng.random_range(0.5..80.0), rng.random_range(1e-4..20.0));
        let f = fuse_geo_deep(Some(g), Some(d)).map_err(|e| e.to_string())?;
        let tol = 1e-12 * g.d.max(d.d);
        let convex = f.d >= g.d.min(d.d) - tol && f.d <= g.d.max(d.d) + tol;
        let dominant = f.var <= g.var.min(d.var) * (1.0 + 1e-12);
        if !(convex && dominant) {
            return Err(format!("triple {k}: {g:?} {d:?} -> {f:?}"));
        }
    }
    let f = fuse_geo_deep(Some(Estimate::new(10.0, 0.05)), Some(Estimate::new(10.3, 0.1))).map_err(|e| e.to_string())?;
    check((f.d - 10.1).abs() <= 0.001, format!("10,000 triples; worked case {:.4} m", f.d))
}

fn c14_state_margins() -> Outcome {
    let cat = DesignCatalog::parse("XA\tred\t1.0\t0,0.5,0.5,20,1,1\nXB\tblue\t1.0\t200,0.5,0.5,240,1,1\n")
        .map_err(|e| e.to_string())?;
    let red = Hsv::new(10.0, 0.8, 0.8);
    let blue = Hsv::new(220.0, 0.8, 0.8);
    let pixels = |a: usize| -> Vec<Hsv> {
        std::iter::repeat_n(red, a).chain(std::iter::repeat_n(blue, 100 - a)).collect()
    };
    let scores = |a| hsv_scores(&pixels(a), &cat).map_err(|e| e.to_string());
    let close = scores(57)?;
    let clear = scores(58)?;
    let margin = |s: &BTreeMap<String, f64>| s["XA"] - s["XB"];
    let d_close = decide(None, &close, None);
    let d_clear = decide(None, &clear, None);
    check(
        d_close.stage == DecisionStage::Combined && d_clear.stage == DecisionStage::Color && d_clear.state_id == "XA",
        format!(
            "margin {:.2} -> {:?}, margin {:.2} -> {:?}",
            margin(&close),
            d_close.stage,
            margin(&clear),
            d_clear.stage
        ),
    )
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "error budget", c1_error_budget()));
    results.push((2, "pinhole anchor", c2_pinhole_anchor()));
    match static_logs() {
        Ok((log, default_log, secs)) => {
            results.push((3, "monte-carlo accuracy", c3_monte_carlo(&log, secs)));
            results.push((4, "state-height bias", c4_default_height_bias(&default_log)));
            results.push((5, "multi-character variance", c5_multi_char_variance(&log)));
        }
        Err(e) => {
            for (k, name) in [(3, "monte-carlo accuracy"), (4, "state-height bias"), (5, "multi-character variance")] {
                results.push((k, name, Err(e.clone())));
            }
        }
    }
    results.push((6, "pose round trip", c6_pose_round_trip()));
    results.push((7, "ema convergence", c7_ema_convergence()));
    results.push((8, "occlusion continuity", c8_occlusion()));
    results.push((9, "kalman smoothing", c9_kalman_smoothing()));
    results.push((10, "velocity and ttc", c10_velocity_ttc()));
    results.push((11, "oracle equivalence", c11_oracles()));
    results.push((12, "detector fsm", c12_detector_fsm()));
    results.push((13, "fusion algebra", c13_fusion_algebra()));
    results.push((14, "state-id margins", c14_state_margins()));

    let mut failed = 0;
    for (k, name, r) in &results {
        match r {
            Ok(d) => println!("PASS {k:>2} {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {k:>2} {name}: {d}");
            }
        }
    }
    println!(
        "{} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
