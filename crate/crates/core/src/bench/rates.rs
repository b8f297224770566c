//! Minimax rate exponents and empirical rate sweeps.
//!
//! Over a Besov ball `B^s_{p,r}` the estimator's MISE decays like
//! `ρ_n^{-2s/(2s+2δ+2d+1)}` when `p >= 2`, and like
//! `(log ρ_n / ρ_n)^{2s/(2s+2δ+2d+1)}` when `p ∈ [1,2)` and
//! `s > (1/p - 1/2)(2δ+2d+1)`. The lower bound has the same exponent over
//! `ρ*_n = Σ σ_v^{-2δ}`.

use rayon::prelude::*;
use serde::Serialize;

use super::config::KernelRecipe;
use super::{derive_seed, thread_pool};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate, EstimatorConfig, LevelScaling, Method, ThresholdScale, DEFAULT_LAMBDA,
};
use crate::meyer::{atom_series, AtomKind};
use crate::model::simulate_replication;
use crate::series::FourierSeries;
use crate::signals::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuery {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    pub delta: f64,
    pub d: u32,
}

impl RateQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::arg(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.r >= 1.0) {
            return Err(Error::arg(format!("r must be >= 1, got {}", self.r)));
        }
        if !(self.s > 1.0 / self.p) || !self.s.is_finite() {
            return Err(Error::arg(format!(
                "s must exceed 1/p = {}, got {}",
                1.0 / self.p,
                self.s
            )));
        }
        if !(self.delta > 1.0) || !self.delta.is_finite() {
            return Err(Error::arg(format!(
                "delta must exceed 1, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    fn exponent(&self) -> f64 {
        2.0 * self.s / (2.0 * self.s + 2.0 * self.delta + 2.0 * self.d as f64 + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateExponent {
    /// `2s/(2s+2δ+2d+1)`.
    pub exponent: f64,
    /// The rate is in `log ρ_n / ρ_n` rather than `1/ρ_n`.
    pub log_factor: bool,
    /// False for `p ∈ [1,2)` with `s <= (1/p - 1/2)(2δ+2d+1)`, where no upper bound is available.
    pub covered: bool,
}

pub fn theoretical_exponent(q: &RateQuery) -> Result<RateExponent> {
    q.validate()?;
    let sparse = q.p < 2.0;
    let log_factor = sparse && q.s > (1.0 / q.p - 0.5) * (2.0 * q.delta + 2.0 * q.d as f64 + 1.0);
    Ok(RateExponent {
        exponent: q.exponent(),
        log_factor,
        covered: !sparse || log_factor,
    })
}

/// Exponent of the lower bound `(ρ*_n)^{-2s/(2s+2δ+2d+1)}`.
pub fn lower_bound_exponent(q: &RateQuery) -> Result<f64> {
    q.validate()?;
    Ok(q.exponent())
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::arg("slope fit needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("slope fit needs distinct x values"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepTarget {
    Function(TestFunction),
    /// The real mother atom `ψ_{j,k}`.
    Atom {
        j: u32,
        k: u64,
    },
}

impl SweepTarget {
    fn series(&self, band: i64) -> FourierSeries {
        match self {
            SweepTarget::Function(f) => f.fourier(band),
            SweepTarget::Atom { j, k } => atom_series(*j, *k, AtomKind::Mother).with_band(band),
        }
    }

    fn truth(&self, grid: usize, d: u32) -> Result<Vec<f64>> {
        match self {
            SweepTarget::Function(f) => Ok(f.sample(grid, d)),
            SweepTarget::Atom { .. } => {
                self.series(grid as i64 / 2 - 1).derivative(d).to_grid(grid)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateSweepSpec {
    pub target: SweepTarget,
    pub method: Method,
    pub d: u32,
    pub kernel: KernelRecipe,
    /// Channel counts; `ρ_n` grows with them.
    pub n: Vec<usize>,
    pub epsilon: f64,
    pub replications: usize,
    pub grid: usize,
    pub lambda: f64,
    pub j1: Option<u32>,
    pub j2: Option<u32>,
    pub block_size: Option<usize>,
    pub threshold_scale: ThresholdScale,
    pub level_scaling: LevelScaling,
    /// Nominal Besov smoothness used for the reference slope.
    pub s: f64,
}

impl RateSweepSpec {
    /// Identical channels with `σ` on a 4096-point grid, noise-adjusted levels and
    /// variance-scaled thresholds.
    pub fn new(target: SweepTarget, d: u32, sigma: f64, n: Vec<usize>, epsilon: f64) -> Self {
        let grid = 4096;
        Self {
            target,
            method: Method::BlockJS,
            d,
            kernel: KernelRecipe::Constant { sigma },
            n,
            epsilon,
            replications: 20,
            grid,
            lambda: DEFAULT_LAMBDA,
            j1: None,
            j2: None,
            block_size: None,
            threshold_scale: ThresholdScale::Variance,
            level_scaling: LevelScaling::NoiseAdjusted,
            s: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub rho_n: f64,
    pub mise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSweep {
    pub points: Vec<RatePoint>,
    /// Fitted slope of `log MISE` against `log ρ_n`; `None` when degenerate.
    pub slope: Option<f64>,
    /// Set when the MISE values are too small to fit (e.g. noiseless runs).
    pub degenerate: bool,
    pub theoretical_slope: f64,
}

/// MISE relative to the target energy below which a sweep counts as degenerate.
const DEGENERATE_RELATIVE_MISE: f64 = 1e-20;

/// Runs MISE at each channel count and fits the log-log slope.
pub fn rate_sweep(spec: &RateSweepSpec, seed: u64, threads: Option<usize>) -> Result<RateSweep> {
    if spec.n.len() < 3 {
        return Err(Error::arg(format!(
            "rate sweep needs at least 3 grid points, got {}",
            spec.n.len()
        )));
    }
    if spec.replications == 0 {
        return Err(Error::arg("replications must be at least 1"));
    }
    let band = spec.grid as i64 / 2 - 1;
    let f_hat = spec.target.series(band);
    let truth = spec.target.truth(spec.grid, spec.d)?;
    let config = EstimatorConfig {
        d: spec.d,
        lambda: spec.lambda,
        method: spec.method,
        j1: spec.j1,
        j2: spec.j2,
        block_size: spec.block_size,
        threshold_scale: spec.threshold_scale,
        level_scaling: spec.level_scaling,
        ..EstimatorConfig::default()
    };
    let kernel_seed = derive_seed(seed, 0);
    let noise_seed = derive_seed(seed, 1);
    let pool = thread_pool(threads)?;
    let mut points = Vec::new();
    for &n in &spec.n {
        let channels = spec.kernel.channels(n, kernel_seed)?;
        let errors: Vec<f64> = pool.install(|| {
            (0..spec.replications)
                .into_par_iter()
                .map(|rep| {
                    let obs = simulate_replication(
                        &f_hat,
                        &channels,
                        spec.epsilon,
                        noise_seed,
                        rep as u64,
                    )?;
                    let est = estimate(&obs, &channels, &config, spec.grid)?;
                    Ok(est
                        .signal
                        .iter()
                        .zip(&truth)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        / spec.grid as f64)
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        points.push(RatePoint {
            n,
            rho_n: channels.rho_n(),
            mise: errors.iter().sum::<f64>() / errors.len() as f64,
        });
    }
    let scale = truth.iter().map(|x| x * x).sum::<f64>() / truth.len() as f64;
    let degenerate = points
        .iter()
        .any(|p| !(p.mise > DEGENERATE_RELATIVE_MISE * scale.max(f64::MIN_POSITIVE)));
    let slope = if degenerate {
        None
    } else {
        let x: Vec<f64> = points.iter().map(|p| p.rho_n.ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.mise.ln()).collect();
        Some(fit_slope(&x, &y)?)
    };
    let delta = 2.0;
    let theoretical_slope =
        -2.0 * spec.s / (2.0 * spec.s + 2.0 * delta + 2.0 * spec.d as f64 + 1.0);
    Ok(RateSweep {
        points,
        slope,
        degenerate,
        theoretical_slope,
    })
}
