//! The BlockJS estimator of `f^(d)` and its comparison rules.
//!
//! Pipeline: choose levels and block size ([`plan::level_plan`]), compute the
//! empirical coefficients ([`coeffs`]), leave the approximation level untouched,
//! shrink each detail level with the selected rule ([`shrink`]), and synthesize
//! on the evaluation grid.
//!
//! With the nominal scale, block rules use the per-level base `λ ε² ρ_n^{-1} 2^{2j(δ+d)}`
//! and term rules use `t_j = sqrt(λ_T) ε 2^{j(δ+d)} sqrt(log ρ_n / ρ_n)` where
//! `log ρ_n` is floored at 1. With the variance scale, `ε² ρ_n^{-1} 2^{2j(δ+d)}` is
//! replaced by the exact noise variance `v_j` of a level-`j` coefficient, giving
//! `λ v_j` and `t_j = sqrt(λ_T v_j)`. `λ_T` defaults to `2 log N` for `N` detail
//! coefficients.

pub mod coeffs;
pub mod plan;
pub mod shrink;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use coeffs::{
    aggregate_deconvolved, coefficient_noise_variance, empirical_alpha, empirical_beta,
    empirical_coeffs,
};
pub use plan::{block_layout, level_plan, BlockLayout, ClampFlags, FormulaLevels, LevelPlan};
pub use shrink::{blockhard_shrink, blockjs_factor, blockjs_shrink, term_shrink, TermRule};

use crate::error::{Error, Result};
use crate::meyer::{self, AtomKind, MeyerWindow, WaveletCoeffs};
use crate::model::{ChannelSet, ObservationSet};

/// Root of `λ - log λ = 3` above 1, the classical BlockJS constant.
pub const DEFAULT_LAMBDA: f64 = 4.505241495792883;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    BlockJS,
    BlockH,
    TermJS,
    TermH,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::BlockJS,
        Method::BlockH,
        Method::TermJS,
        Method::TermH,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::BlockJS => "BlockJS",
            Method::BlockH => "BlockH",
            Method::TermJS => "TermJS",
            Method::TermH => "TermH",
        }
    }

    pub fn is_block(&self) -> bool {
        matches!(self, Method::BlockJS | Method::BlockH)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::arg(format!("unknown method `{s}`")))
    }
}

/// Per-level noise scale entering the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdScale {
    /// `ε² ρ_n^{-1} 2^{2j(δ+d)}`, the order of the coefficient noise variance.
    #[default]
    Nominal,
    /// The exact variance of the noise in a level-`j` detail coefficient.
    Variance,
}

impl ThresholdScale {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdScale::Nominal => "nominal",
            ThresholdScale::Variance => "variance",
        }
    }
}

impl fmt::Display for ThresholdScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThresholdScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nominal" => Ok(ThresholdScale::Nominal),
            "variance" => Ok(ThresholdScale::Variance),
            _ => Err(Error::arg(format!("unknown threshold scale `{s}`"))),
        }
    }
}

/// Which `ρ` the level formulas are evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelScaling {
    /// `ρ_n` itself.
    #[default]
    Rho,
    /// `ρ_n / ε²`. The coefficient noise variance depends on `(ε, ρ_n)` only
    /// through this ratio, so the resulting plan is invariant to rescaling the noise.
    NoiseAdjusted,
}

impl LevelScaling {
    pub fn effective_rho(&self, rho_n: f64, epsilon: f64) -> f64 {
        match self {
            LevelScaling::Rho => rho_n,
            LevelScaling::NoiseAdjusted => rho_n / (epsilon * epsilon),
        }
    }
}

impl FromStr for LevelScaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rho" => Ok(LevelScaling::Rho),
            "noise_adjusted" => Ok(LevelScaling::NoiseAdjusted),
            _ => Err(Error::arg(format!("unknown level scaling `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Derivative order.
    pub d: u32,
    /// Block threshold constant.
    pub lambda: f64,
    pub method: Method,
    pub j1: Option<u32>,
    pub j2: Option<u32>,
    pub block_size: Option<usize>,
    /// Term threshold constant `λ_T`; `None` means `2 log N`.
    pub term_lambda: Option<f64>,
    pub threshold_scale: ThresholdScale,
    pub level_scaling: LevelScaling,
    pub window: MeyerWindow,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            d: 0,
            lambda: DEFAULT_LAMBDA,
            method: Method::BlockJS,
            j1: None,
            j2: None,
            block_size: None,
            term_lambda: None,
            threshold_scale: ThresholdScale::Nominal,
            level_scaling: LevelScaling::Rho,
            window: MeyerWindow::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn new(method: Method, d: u32) -> Self {
        Self {
            method,
            d,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::arg(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if let Some(t) = self.term_lambda {
            if !(t >= 0.0) {
                return Err(Error::arg(format!(
                    "term lambda must be non-negative, got {t}"
                )));
            }
        }
        if self.d > self.window.smoothness() {
            return Err(Error::arg(format!(
                "derivative order {} exceeds the window smoothness {}",
                self.d,
                self.window.smoothness()
            )));
        }
        Ok(())
    }

    /// Level plan for these channels, noise level and grid, with this config's overrides applied.
    pub fn plan(&self, channels: &ChannelSet, epsilon: f64, grid: usize) -> Result<LevelPlan> {
        let rho = self.level_scaling.effective_rho(channels.rho_n(), epsilon);
        level_plan(rho, channels.delta(), self.d, grid).with_overrides(
            self.j1,
            self.j2,
            self.block_size,
        )
    }
}

/// Output of [`estimate`]: the signal on the grid plus everything needed to inspect it.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub signal: Vec<f64>,
    pub coeffs: WaveletCoeffs,
    pub raw: WaveletCoeffs,
    pub plan: LevelPlan,
    pub layouts: Vec<BlockLayout>,
    /// Per detail level: the block base for block rules, `t_j` for term rules.
    pub thresholds: Vec<f64>,
}

/// `λ ε² ρ_n^{-1} 2^{2j(δ+d)}`.
pub fn block_threshold_base(
    lambda: f64,
    epsilon: f64,
    rho_n: f64,
    delta: f64,
    d: u32,
    j: u32,
) -> f64 {
    lambda * epsilon * epsilon / rho_n * 2f64.powf(2.0 * j as f64 * (delta + d as f64))
}

/// `sqrt(λ_T) ε 2^{j(δ+d)} sqrt(max(log ρ_n, 1) / ρ_n)`.
pub fn term_threshold(
    term_lambda: f64,
    epsilon: f64,
    rho_n: f64,
    delta: f64,
    d: u32,
    j: u32,
) -> f64 {
    term_lambda.sqrt()
        * epsilon
        * 2f64.powf(j as f64 * (delta + d as f64))
        * (rho_n.ln().max(1.0) / rho_n).sqrt()
}

/// Exact variance of a level-`j` detail coefficient (the same for every `k`).
pub fn level_noise_variance(
    channels: &ChannelSet,
    window: &MeyerWindow,
    epsilon: f64,
    j: u32,
    d: u32,
) -> Result<f64> {
    let rho = channels.rho_n();
    let reach = meyer::max_support_freq(AtomKind::Mother, j);
    let mut total = 0.0;
    for (v, kernel) in channels.kernels().iter().enumerate() {
        let w = kernel.weight();
        let mut per_channel = 0.0;
        for l in -reach..=reach {
            let atom = window.level_window(AtomKind::Mother, j, l).powi(2) / (1u64 << j) as f64;
            if atom == 0.0 {
                continue;
            }
            let g = kernel.fourier(l).unwrap_or_default().norm_sqr();
            if g == 0.0 {
                return Err(Error::NotInvertible {
                    channel: v + 1,
                    freq: l,
                });
            }
            per_channel += crate::series::derivative_factor(l, d).norm_sqr() * atom / g;
        }
        total += w * w * per_channel;
    }
    Ok(epsilon * epsilon * total / (rho * rho))
}

/// Shrinks every detail level of `raw` with the configured rule.
pub fn shrink_details(
    raw: &WaveletCoeffs,
    plan: &LevelPlan,
    config: &EstimatorConfig,
    channels: &ChannelSet,
    epsilon: f64,
) -> Result<(WaveletCoeffs, Vec<BlockLayout>, Vec<f64>)> {
    let mut out = raw.clone();
    let mut layouts = Vec::new();
    let mut thresholds = Vec::new();
    let delta = channels.delta();
    let rho_n = channels.rho_n();
    let term_lambda = config
        .term_lambda
        .unwrap_or_else(|| 2.0 * (plan.detail_count() as f64).ln());
    for j in raw.j1..=raw.j2 {
        let layout = block_layout(j, plan.block_size)?;
        let beta = raw.level(j);
        let variance = match config.threshold_scale {
            ThresholdScale::Nominal => None,
            ThresholdScale::Variance => Some(level_noise_variance(
                channels,
                &config.window,
                epsilon,
                j,
                config.d,
            )?),
        };
        let (shrunk, thr) = match config.method {
            Method::BlockJS | Method::BlockH => {
                let base = match variance {
                    None => block_threshold_base(config.lambda, epsilon, rho_n, delta, config.d, j),
                    Some(v) => config.lambda * v,
                };
                let s = if config.method == Method::BlockJS {
                    blockjs_shrink(beta, &layout, base)
                } else {
                    blockhard_shrink(beta, &layout, base)
                };
                (s, base)
            }
            Method::TermJS | Method::TermH => {
                let t = match variance {
                    None => term_threshold(term_lambda, epsilon, rho_n, delta, config.d, j),
                    Some(v) => (term_lambda * v).sqrt(),
                };
                let rule = if config.method == Method::TermJS {
                    TermRule::Garrote
                } else {
                    TermRule::Hard
                };
                (term_shrink(beta, t, rule), t)
            }
        };
        *out.level_mut(j) = shrunk;
        layouts.push(layout);
        thresholds.push(thr);
    }
    Ok((out, layouts, thresholds))
}

/// Estimates `f^(d)` on `t_i = i/T` from multichannel observations.
pub fn estimate(
    obs: &ObservationSet,
    channels: &ChannelSet,
    config: &EstimatorConfig,
    grid: usize,
) -> Result<Estimate> {
    config.validate()?;
    let plan = config.plan(channels, obs.epsilon(), grid)?;
    let raw = empirical_coeffs(obs, channels, &config.window, plan.j1, plan.j2, config.d)?;
    let (coeffs, layouts, thresholds) =
        shrink_details(&raw, &plan, config, channels, obs.epsilon())?;
    let series = meyer::synthesize_series_with(&config.window, &coeffs);
    if (grid as i64) < 2 * coeffs.max_freq() + 1 {
        return Err(Error::Aliasing {
            grid,
            max_freq: coeffs.max_freq(),
        });
    }
    let signal = series.to_grid(grid)?;
    Ok(Estimate {
        signal,
        coeffs,
        raw,
        plan,
        layouts,
        thresholds,
    })
}

#[derive(Serialize)]
struct CoefficientRow {
    kind: &'static str,
    j: u32,
    k: usize,
    raw_re: f64,
    raw_im: f64,
    re: f64,
    im: f64,
    block: Option<usize>,
    kept: bool,
}

/// Writes raw and shrunk coefficients as CSV
/// (`kind,j,k,raw_re,raw_im,re,im,block,kept`); approximation rows have no block.
pub fn write_coefficients<W: Write>(est: &Estimate, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let row = |kind, j, k, raw: Complex64, s: Complex64, block| CoefficientRow {
        kind,
        j,
        k,
        raw_re: raw.re,
        raw_im: raw.im,
        re: s.re,
        im: s.im,
        block,
        kept: s != Complex64::default() || raw == Complex64::default(),
    };
    for (k, (&raw, &s)) in est.raw.alpha.iter().zip(&est.coeffs.alpha).enumerate() {
        w.serialize(row("alpha", est.raw.j1, k, raw, s, None))?;
    }
    for (layout, j) in est.layouts.iter().zip(est.raw.j1..=est.raw.j2) {
        for (k, (&raw, &s)) in est.raw.level(j).iter().zip(est.coeffs.level(j)).enumerate() {
            w.serialize(row("beta", j, k, raw, s, Some(layout.block_of(k))))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate;
    use crate::series::FourierSeries;

    #[test]
    fn default_lambda_solves_equation() {
        // bisection on λ - log λ - 3 over [1, 10]
        let (mut lo, mut hi) = (1.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - mid.ln() - 3.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((DEFAULT_LAMBDA - lo).abs() < 1e-14);
        assert!((DEFAULT_LAMBDA - 4.50524).abs() < 1e-5);
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().to_lowercase().parse::<Method>().unwrap(), m);
        }
        assert!("wiener".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = EstimatorConfig::default();
        assert!(c.validate().is_ok());
        c.lambda = 0.0;
        assert!(c.validate().is_err());
        let c = EstimatorConfig::new(Method::BlockJS, 4);
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_estimate_reproduces_band_limited_signal() {
        let f = FourierSeries::from_fn(42, |l| match l.abs() {
            0 => Complex64::new(0.5, 0.0),
            2 => Complex64::new(0.1, 0.0),
            12 => Complex64::new(0.05, 0.0),
            _ => Complex64::default(),
        });
        let channels = ChannelSet::laplacian_sigmas(&[0.3, 0.8, 1.4]).unwrap();
        let obs = simulate(&f, &channels, 0.0, 3).unwrap();
        let truth = f.to_grid(256).unwrap();
        for method in Method::ALL {
            let mut config = EstimatorConfig::new(method, 0);
            config.j2 = Some(5);
            let est = estimate(&obs, &channels, &config, 256).unwrap();
            for (a, b) in est.signal.iter().zip(&truth) {
                assert!((a - b).abs() < 1e-8, "{method}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn infinite_term_threshold_keeps_only_approximation() {
        let f = FourierSeries::from_fn(42, |l| Complex64::new(1.0 / (1.0 + (l * l) as f64), 0.0));
        let channels = ChannelSet::laplacian_sigmas(&[0.5]).unwrap();
        let obs = simulate(&f, &channels, 0.01, 3).unwrap();
        let mut config = EstimatorConfig::new(Method::TermH, 0);
        config.j1 = Some(2);
        config.j2 = Some(5);
        config.term_lambda = Some(f64::INFINITY);
        let est = estimate(&obs, &channels, &config, 128).unwrap();
        assert!(est.coeffs.beta.iter().flatten().all(|b| b.norm() == 0.0));
        let mut approx_only = est.raw.clone();
        for b in approx_only.beta.iter_mut() {
            b.iter_mut().for_each(|x| *x = Complex64::default());
        }
        let expected = meyer::synthesize(&approx_only, 128).unwrap();
        for (a, b) in est.signal.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn level_variance_matches_per_coefficient_formula() {
        let channels = ChannelSet::laplacian_sigmas(&[0.4, 1.1, 2.5]).unwrap();
        for (j, d) in [(3, 0), (4, 1), (5, 2)] {
            let v = level_noise_variance(&channels, &MeyerWindow::default(), 0.02, j, d).unwrap();
            for k in [0, 3, (1u64 << j) - 1] {
                let c =
                    coefficient_noise_variance(&channels, 0.02, j, k, AtomKind::Mother, d).unwrap();
                assert!((v - c).abs() <= 1e-12 * c, "j={j} k={k}: {v} vs {c}");
            }
        }
    }

    #[test]
    fn variance_scale_thresholds_are_proportional_to_level_variance() {
        let f = FourierSeries::from_fn(42, |l| Complex64::new(1.0 / (1.0 + (l * l) as f64), 0.0));
        let channels = ChannelSet::laplacian_sigmas(&[0.5, 0.9]).unwrap();
        let obs = simulate(&f, &channels, 0.01, 3).unwrap();
        let mut config = EstimatorConfig::new(Method::BlockJS, 1);
        config.j1 = Some(2);
        config.j2 = Some(5);
        config.threshold_scale = ThresholdScale::Variance;
        let est = estimate(&obs, &channels, &config, 128).unwrap();
        for (i, j) in (2..=5).enumerate() {
            let v = level_noise_variance(&channels, &config.window, 0.01, j, 1).unwrap();
            assert!((est.thresholds[i] - config.lambda * v).abs() <= 1e-12 * est.thresholds[i]);
        }
        config.method = Method::TermH;
        config.term_lambda = Some(3.0);
        let est = estimate(&obs, &channels, &config, 128).unwrap();
        let v = level_noise_variance(&channels, &config.window, 0.01, 4, 1).unwrap();
        assert!((est.thresholds[2] - (3.0 * v).sqrt()).abs() < 1e-15);
        assert_eq!(
            "Variance".parse::<ThresholdScale>().unwrap(),
            ThresholdScale::Variance
        );
    }

    #[test]
    fn noise_adjusted_plan_depends_on_rho_over_noise() {
        let a = ChannelSet::laplacian_sigmas(&[0.1; 4]).unwrap();
        let b = ChannelSet::laplacian_sigmas(&[0.1; 16]).unwrap();
        let mut config = EstimatorConfig::new(Method::BlockJS, 0);
        config.level_scaling = LevelScaling::NoiseAdjusted;
        let pa = config.plan(&a, 0.01, 4096).unwrap();
        let pb = config.plan(&b, 0.02, 4096).unwrap();
        assert_eq!((pa.j1, pa.j2, pa.block_size), (pb.j1, pb.j2, pb.block_size));
        assert!((pa.rho_n - a.rho_n() * 1e4).abs() < 1e-9 * pa.rho_n);
        let literal = EstimatorConfig::new(Method::BlockJS, 0)
            .plan(&a, 0.01, 4096)
            .unwrap();
        assert_eq!(literal.rho_n, a.rho_n());
    }

    #[test]
    fn coefficient_csv_has_expected_shape() {
        let f = FourierSeries::from_fn(21, |l| Complex64::new(if l == 0 { 1.0 } else { 0.0 }, 0.0));
        let channels = ChannelSet::laplacian_sigmas(&[0.5]).unwrap();
        let obs = simulate(&f, &channels, 0.0, 0).unwrap();
        let mut config = EstimatorConfig::default();
        config.j1 = Some(1);
        config.j2 = Some(4);
        config.block_size = Some(2);
        let est = estimate(&obs, &channels, &config, 64).unwrap();
        let mut buf = Vec::new();
        write_coefficients(&est, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "kind,j,k,raw_re,raw_im,re,im,block,kept");
        assert_eq!(lines.len(), 1 + 2 + 2 + 4 + 8 + 16);
        assert!(lines[1].starts_with("alpha,1,0,"));
    }
}
