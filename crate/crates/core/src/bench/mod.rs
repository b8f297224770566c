//! Experiment runner: replicated PSNR tables, rate exponents, rate sweeps and a self-test.

pub mod config;
pub mod rates;
pub mod run;
pub mod selftest;

pub use config::{ExperimentSpec, KernelRecipe, LevelRule, NoiseLevel};
pub use rates::{
    fit_slope, lower_bound_exponent, rate_sweep, theoretical_exponent, RateExponent, RatePoint,
    RateQuery, RateSweep, RateSweepSpec, SweepTarget,
};
pub use run::{
    calibrate_epsilon, parse_results_csv, results_csv, run_experiment, write_outputs,
    ExperimentResult, ResultRow,
};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DECONWAVE_THREADS";

/// A seed for stream `stream` of master seed `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Worker count: the explicit value, else `DECONWAVE_THREADS`, else rayon's default.
pub fn resolve_threads(explicit: Option<usize>) -> Result<usize> {
    if let Some(t) = explicit {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(0),
    }
}

pub(crate) fn thread_pool(explicit: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(explicit)?)
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}
