use rayon::prelude::*;

use super::log::Summary;
use super::pipeline::{run_pipeline, PipelineConfig};
use super::Scenario;
use crate::error::{Error, Result};

/// Seed of trial `i`, one splitmix64 step from the master seed.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    let mut z = master.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `n` independent copies of the scenario on at most `jobs` threads.
/// Results are in trial order whatever the thread count.
pub fn run_trials(sc: &Scenario, cfg: &PipelineConfig, n: usize, jobs: usize) -> Result<Vec<Summary>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = sc.clone();
                s.seed = trial_seed(sc.seed, i as u64);
                run_pipeline(&s, cfg).map(|log| log.summary())
            })
            .collect()
    })
}
