//! Fast invariant suite behind the `selftest` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentSpec, KernelRecipe};
use super::rates::{theoretical_exponent, RateQuery};
use super::run::{results_csv, run_experiment};
use crate::error::Result;
use crate::estimators::{
    block_layout, blockhard_shrink, blockjs_shrink, empirical_coeffs, term_shrink, TermRule,
};
use crate::meyer::{analyze, synthesize_series, MeyerWindow, WaveletCoeffs};
use crate::model::{simulate, ChannelSet};
use crate::signals::TestFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from(name: &'static str, outcome: Result<(bool, String)>) -> Self {
        match outcome {
            Ok((passed, detail)) => Check {
                name,
                passed,
                detail,
            },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }
}

fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

fn basis_round_trip() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let mut c = WaveletCoeffs::zeros(3, 6);
        c.alpha
            .iter_mut()
            .for_each(|a| *a = random_complex(&mut rng));
        c.beta
            .iter_mut()
            .flatten()
            .for_each(|b| *b = random_complex(&mut rng));
        let back = analyze(&synthesize_series(&c), 3, 6, 0)?;
        worst = worst.max(relative_error(&back.flatten(), &c.flatten()));
    }
    Ok((worst < 1e-10, format!("max relative error {worst:.2e}")))
}

fn noiseless_oracle() -> Result<(bool, String)> {
    let f_hat = TestFunction::Wave.fourier(200);
    let channels = ChannelSet::laplacian_sigmas(&[0.3, 0.7, 1.5])?;
    let obs = simulate(&f_hat, &channels, 0.0, 0)?;
    let mut worst: f64 = 0.0;
    for d in 0..=2 {
        let got = empirical_coeffs(&obs, &channels, &MeyerWindow::default(), 2, 5, d)?;
        let want = analyze(&f_hat, 2, 5, d)?;
        worst = worst.max(relative_error(&got.flatten(), &want.flatten()));
    }
    Ok((worst < 1e-9, format!("max relative error {worst:.2e}")))
}

fn shrinkage_invariants() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..500 {
        let j = rng.random_range(0..6u32);
        let size = rng.random_range(1..=(1usize << j));
        let layout = block_layout(j, size)?;
        let beta: Vec<Complex64> = (0..1 << j).map(|_| random_complex(&mut rng)).collect();
        let base = rng.random_range(0.0..1.0);
        let js = blockjs_shrink(&beta, &layout, base);
        let hard = blockhard_shrink(&beta, &layout, base);
        let term = term_shrink(&beta, base.sqrt(), TermRule::Garrote);
        for out in [&js, &hard, &term] {
            for (o, b) in out.iter().zip(&beta) {
                let shrinks = o.norm() <= b.norm() * (1.0 + 1e-15);
                let aligned = o.norm() == 0.0 || (o.arg() - b.arg()).abs() < 1e-12;
                if !shrinks || !aligned {
                    violations += 1;
                }
            }
        }
        for (a, b) in js.iter().zip(&hard) {
            if (a.norm() == 0.0) != (b.norm() == 0.0) {
                violations += 1;
            }
        }
        if blockjs_shrink(&beta, &layout, 0.0) != beta {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!("{violations} violations over 500 levels"),
    ))
}

fn exponents() -> Result<(bool, String)> {
    let q = |d| RateQuery {
        s: 2.0,
        p: 2.0,
        r: 2.0,
        delta: 2.0,
        d,
    };
    let a = theoretical_exponent(&q(0))?.exponent;
    let b = theoretical_exponent(&q(1))?.exponent;
    Ok((
        a == 4.0 / 9.0 && b == 4.0 / 11.0,
        format!("d=0: {a}, d=1: {b}"),
    ))
}

fn bench_determinism() -> Result<(bool, String)> {
    let mut spec = ExperimentSpec::new(vec![2, 3], vec![20.0]);
    spec.functions = vec![TestFunction::Wave.name().to_string()];
    spec.grid = 256;
    spec.replications = 3;
    spec.kernel = KernelRecipe::Index { scale: 0.2 };
    let one = results_csv(&run_experiment(&spec, 11, Some(1))?.rows)?;
    let many = results_csv(&run_experiment(&spec, 11, Some(4))?.rows)?;
    Ok((one == many, format!("{} bytes", one.len())))
}

/// Runs every check; never panics on numeric failures.
pub fn run_selftest() -> Vec<Check> {
    vec![
        Check::from("basis_round_trip", basis_round_trip()),
        Check::from("noiseless_oracle", noiseless_oracle()),
        Check::from("shrinkage_invariants", shrinkage_invariants()),
        Check::from("rate_exponents", exponents()),
        Check::from("bench_determinism", bench_determinism()),
    ]
}
