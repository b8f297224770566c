//! Experiment configuration.
//!
//! A config is a JSON object; unknown keys are rejected. Example:
//!
//! ```json
//! {
//!   "functions": ["Wave", "Parabolas"],
//!   "d": [0, 1, 2],
//!   "methods": ["BlockJS", "BlockH", "TermJS", "TermH"],
//!   "n": [10, 20, 50, 100],
//!   "bsnr_db": [40, 25, 10],
//!   "grid": 4096,
//!   "replications": 10,
//!   "kernel": { "kind": "random", "sigma_max": 0.5 }
//! }
//! ```
//!
//! See the README for the full key list.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{LevelScaling, Method, ThresholdScale, DEFAULT_LAMBDA};
use crate::meyer::MeyerWindow;
use crate::model::{random_sigmas, BlurKernel, ChannelSet};
use crate::signals::TestFunction;

/// How the smoothness parameters `σ_v` of the Laplacian channels are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelRecipe {
    /// `σ_v = scale · v`.
    Index {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `σ_v` i.i.d. uniform on `(0, sigma_max]`, drawn from the master seed.
    Random {
        #[serde(default = "default_sigma_max")]
        sigma_max: f64,
    },
    /// Every channel has the same `σ`.
    Constant { sigma: f64 },
    /// Explicit `σ_v`; channel counts may not exceed the list length.
    Sigma { values: Vec<f64> },
    /// Explicit Laplacian scales `τ_v`, with `σ_v = 2π τ_v`.
    Tau { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

fn default_sigma_max() -> f64 {
    0.5
}

impl Default for KernelRecipe {
    fn default() -> Self {
        KernelRecipe::Random { sigma_max: 0.5 }
    }
}

impl KernelRecipe {
    /// The first `n` smoothness parameters. `seed` feeds the random recipe.
    pub fn sigmas(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let take = |values: &[f64], scale: f64| -> Result<Vec<f64>> {
            if n > values.len() {
                return Err(Error::Config(format!(
                    "kernel list has {} entries but {n} channels were requested",
                    values.len()
                )));
            }
            Ok(values[..n].iter().map(|v| v * scale).collect())
        };
        match self {
            KernelRecipe::Index { scale } => Ok((1..=n).map(|v| scale * v as f64).collect()),
            KernelRecipe::Random { sigma_max } => Ok(random_sigmas(n, *sigma_max, seed)),
            KernelRecipe::Constant { sigma } => Ok(vec![*sigma; n]),
            KernelRecipe::Sigma { values } => take(values, 1.0),
            KernelRecipe::Tau { values } => take(values, 2.0 * std::f64::consts::PI),
        }
    }

    pub fn channels(&self, n: usize, seed: u64) -> Result<ChannelSet> {
        let sigmas = self.sigmas(n, seed)?;
        ChannelSet::new(
            sigmas
                .into_iter()
                .map(BlurKernel::laplacian_sigma)
                .collect::<Result<_>>()?,
        )
    }

    fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        let ok = match self {
            KernelRecipe::Index { scale } => positive(*scale),
            KernelRecipe::Random { sigma_max } => positive(*sigma_max),
            KernelRecipe::Constant { sigma } => positive(*sigma),
            KernelRecipe::Sigma { values } | KernelRecipe::Tau { values } => {
                !values.is_empty() && values.iter().all(|&x| positive(x))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid kernel recipe {self:?}")))
        }
    }
}

/// How resolution levels and block size are chosen when not overridden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LevelRule {
    /// The level formulas evaluated at `ρ_n / ε²`, with clamping.
    #[default]
    NoiseAdjusted,
    /// The level formulas evaluated at `ρ_n`, with clamping.
    Formula,
    /// The level formulas with `ρ_n` replaced by the sample count `T`:
    /// `j1 = ⌊log2 ln T⌋`, `L = min(⌊ln T⌋, 2^{j1})`, and `j2 = log2(T) - 2`.
    Grid,
}

impl LevelRule {
    pub fn scaling(&self) -> LevelScaling {
        match self {
            LevelRule::NoiseAdjusted => LevelScaling::NoiseAdjusted,
            LevelRule::Formula | LevelRule::Grid => LevelScaling::Rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "all_functions")]
    pub functions: Vec<String>,
    #[serde(default = "zero_d")]
    pub d: Vec<u32>,
    #[serde(default = "all_methods")]
    pub methods: Vec<String>,
    pub n: Vec<usize>,
    /// Blurred signal-to-noise ratios. Ignored when `epsilon` is set.
    #[serde(default)]
    pub bsnr_db: Vec<f64>,
    /// Fixed white-noise level, bypassing BSNR calibration.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub kernel: KernelRecipe,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub term_lambda: Option<f64>,
    #[serde(default = "default_scale")]
    pub threshold_scale: ThresholdScale,
    #[serde(default)]
    pub level_rule: LevelRule,
    #[serde(default)]
    pub j1: Option<u32>,
    #[serde(default)]
    pub j2: Option<u32>,
    #[serde(default)]
    pub block_size: Option<usize>,
}

fn all_functions() -> Vec<String> {
    TestFunction::ALL
        .iter()
        .map(|f| f.name().to_string())
        .collect()
}

fn all_methods() -> Vec<String> {
    Method::ALL.iter().map(|m| m.name().to_string()).collect()
}

fn zero_d() -> Vec<u32> {
    vec![0]
}

fn default_grid() -> usize {
    4096
}

fn default_replications() -> usize {
    10
}

fn default_scale() -> ThresholdScale {
    ThresholdScale::Variance
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

/// A noise setting of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Bsnr(f64),
    Epsilon(f64),
}

impl ExperimentSpec {
    /// A spec with defaults for everything except channel counts and noise levels.
    pub fn new(n: Vec<usize>, bsnr_db: Vec<f64>) -> Self {
        Self {
            functions: all_functions(),
            d: zero_d(),
            methods: all_methods(),
            n,
            bsnr_db,
            epsilon: None,
            grid: default_grid(),
            replications: default_replications(),
            kernel: KernelRecipe::default(),
            lambda: DEFAULT_LAMBDA,
            term_lambda: None,
            threshold_scale: default_scale(),
            level_rule: LevelRule::NoiseAdjusted,
            j1: None,
            j2: None,
            block_size: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn test_functions(&self) -> Result<Vec<TestFunction>> {
        self.functions
            .iter()
            .map(|f| {
                f.parse()
                    .map_err(|_| Error::Config(format!("unknown test function `{f}`")))
            })
            .collect()
    }

    pub fn method_list(&self) -> Result<Vec<Method>> {
        self.methods
            .iter()
            .map(|m| {
                m.parse()
                    .map_err(|_| Error::Config(format!("unknown method `{m}`")))
            })
            .collect()
    }

    pub fn noise_levels(&self) -> Vec<NoiseLevel> {
        match self.epsilon {
            Some(e) => vec![NoiseLevel::Epsilon(e)],
            None => self.bsnr_db.iter().map(|&b| NoiseLevel::Bsnr(b)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.functions.is_empty()
            || self.methods.is_empty()
            || self.d.is_empty()
            || self.n.is_empty()
        {
            return fail("functions, methods, d and n must be non-empty".into());
        }
        self.test_functions()?;
        self.method_list()?;
        let smooth = MeyerWindow::default().smoothness().min(2);
        if let Some(&d) = self.d.iter().find(|&&d| d > smooth) {
            return fail(format!("derivative order {d} exceeds {smooth}"));
        }
        if self.n.contains(&0) {
            return fail("channel counts must be at least 1".into());
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if !self.grid.is_power_of_two() || self.grid < 256 {
            return fail(format!(
                "grid must be a power of two >= 256, got {}",
                self.grid
            ));
        }
        match self.epsilon {
            Some(e) if !(e >= 0.0 && e.is_finite()) => {
                return fail(format!("epsilon must be >= 0, got {e}"))
            }
            Some(_) => {}
            None if self.bsnr_db.is_empty() => {
                return fail("either bsnr_db or epsilon is required".into())
            }
            None => {
                if self.bsnr_db.iter().any(|b| !b.is_finite()) {
                    return fail("bsnr_db values must be finite".into());
                }
            }
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if let Some(t) = self.term_lambda {
            if !(t >= 0.0) {
                return fail(format!("term_lambda must be >= 0, got {t}"));
            }
        }
        self.kernel.validate()
    }

    /// `(j1, j2, L)` overrides implied by the level rule and explicit settings.
    pub fn level_overrides(&self) -> (Option<u32>, Option<u32>, Option<usize>) {
        match self.level_rule {
            LevelRule::Formula | LevelRule::NoiseAdjusted => (self.j1, self.j2, self.block_size),
            LevelRule::Grid => {
                let log2 = self.grid.trailing_zeros();
                let ln_t = (self.grid as f64).ln();
                let j1 = self.j1.unwrap_or(ln_t.log2().floor() as u32);
                let block = self
                    .block_size
                    .unwrap_or((ln_t.floor() as usize).min(1 << j1));
                (Some(j1), Some(self.j2.unwrap_or(log2 - 2)), Some(block))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let spec = ExperimentSpec::from_json(r#"{"n": [10], "bsnr_db": [25]}"#).unwrap();
        assert_eq!(spec.grid, 4096);
        assert_eq!(spec.replications, 10);
        assert_eq!(spec.methods.len(), 4);
        assert_eq!(spec.kernel, KernelRecipe::Random { sigma_max: 0.5 });
        assert_eq!(spec.threshold_scale, ThresholdScale::Variance);
        assert_eq!(spec.level_rule, LevelRule::NoiseAdjusted);
        assert_eq!(spec.level_overrides(), (None, None, None));
        let grid =
            ExperimentSpec::from_json(r#"{"n": [1], "bsnr_db": [25], "level_rule": "grid"}"#)
                .unwrap();
        assert_eq!(grid.level_overrides(), (Some(3), Some(10), Some(8)));
        let small = ExperimentSpec::from_json(
            r#"{"n": [1], "bsnr_db": [25], "grid": 256, "level_rule": "grid"}"#,
        )
        .unwrap();
        assert_eq!(small.level_overrides(), (Some(2), Some(6), Some(4)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentSpec::from_json(r#"{"n": [10], "bsnr_db": [25], "colour": 1}"#).is_err());
        assert!(ExperimentSpec::from_json(
            r#"{"n": [10], "bsnr_db": [25], "kernel": {"kind": "index", "x": 1}}"#
        )
        .is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for bad in [
            r#"{"n": [0], "bsnr_db": [25]}"#,
            r#"{"n": [1], "bsnr_db": [25], "grid": 100}"#,
            r#"{"n": [1], "bsnr_db": [25], "grid": 128}"#,
            r#"{"n": [1], "bsnr_db": [25], "replications": 0}"#,
            r#"{"n": [1]}"#,
            r#"{"n": [1], "bsnr_db": [25], "functions": ["Blocks"]}"#,
            r#"{"n": [1], "bsnr_db": [25], "d": [3]}"#,
            r#"{"n": [1], "bsnr_db": [25], "kernel": {"kind": "constant", "sigma": -1}}"#,
        ] {
            assert!(ExperimentSpec::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn kernel_recipes() {
        assert_eq!(
            KernelRecipe::Index { scale: 1.0 }.sigmas(3, 0).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let tau = KernelRecipe::Tau { values: vec![0.5] }
            .sigmas(1, 0)
            .unwrap();
        assert!((tau[0] - std::f64::consts::PI).abs() < 1e-15);
        assert!(KernelRecipe::Sigma { values: vec![1.0] }
            .sigmas(2, 0)
            .is_err());
        let r = KernelRecipe::Random { sigma_max: 10.0 };
        let a = r.sigmas(20, 4).unwrap();
        assert_eq!(&a[..5], &r.sigmas(5, 4).unwrap()[..]);
        assert!(a.iter().all(|&s| s > 0.0 && s <= 10.0));
    }
}
