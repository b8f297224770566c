//! Test functions and quality metrics.
//!
//! Closed forms (all 1-periodic on `[0, 1)`):
//!
//! ```text
//! Wave(t)            = 0.5 + 0.2 cos(4πt) + 0.1 cos(24πt)
//! Parabolas(t)       = 0.8 + Σ_i c_i (t - a_i)_+²
//!     a = .1  .2  .3  .35  .37   .41   .43  .5   .7  .9
//!     c = -30 60 -30  500 -1000  1000 -500  7.5 -15  7.5
//! TimeShiftedSine(t) = 0.3 sin(3π (u(t) + t)) + 0.5,   u = g∘g∘g∘g,  g(x) = (1 - cos πx)/2
//! ```
//!
//! Parabolas is C¹ across the wrap with jumps in its second derivative at every knot.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::FourierSeries;

const PARABOLA_KNOTS: [(f64, f64); 10] = [
    (0.1, -30.0),
    (0.2, 60.0),
    (0.3, -30.0),
    (0.35, 500.0),
    (0.37, -1000.0),
    (0.41, 1000.0),
    (0.43, -500.0),
    (0.5, 7.5),
    (0.7, -15.0),
    (0.9, 7.5),
];

/// Quadrature grid for functions without closed-form coefficients.
const QUADRATURE_GRID: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestFunction {
    Wave,
    Parabolas,
    TimeShiftedSine,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [
        TestFunction::Wave,
        TestFunction::Parabolas,
        TestFunction::TimeShiftedSine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Wave => "Wave",
            TestFunction::Parabolas => "Parabolas",
            TestFunction::TimeShiftedSine => "TimeShiftedSine",
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// Analytic `d`-th derivative at `t` (`t` is reduced modulo 1), `d <= 2`.
    ///
    /// At a Parabolas knot the second derivative takes its right-hand value.
    pub fn derivative(&self, t: f64, d: u32) -> f64 {
        assert!(d <= 2, "derivatives are available up to order 2");
        let t = t.rem_euclid(1.0);
        match self {
            TestFunction::Wave => {
                let (w1, w2) = (4.0 * PI, 24.0 * PI);
                match d {
                    0 => 0.5 + 0.2 * (w1 * t).cos() + 0.1 * (w2 * t).cos(),
                    1 => -0.2 * w1 * (w1 * t).sin() - 0.1 * w2 * (w2 * t).sin(),
                    _ => -0.2 * w1 * w1 * (w1 * t).cos() - 0.1 * w2 * w2 * (w2 * t).cos(),
                }
            }
            TestFunction::Parabolas => {
                let mut v = if d == 0 { 0.8 } else { 0.0 };
                for (a, c) in PARABOLA_KNOTS {
                    if t >= a {
                        let u = t - a;
                        v += match d {
                            0 => c * u * u,
                            1 => 2.0 * c * u,
                            _ => 2.0 * c,
                        };
                    }
                }
                v
            }
            TestFunction::TimeShiftedSine => {
                let (u, u1, u2) = warp(t);
                let phase = 3.0 * PI * (u + t);
                match d {
                    0 => 0.3 * phase.sin() + 0.5,
                    1 => 0.3 * 3.0 * PI * (u1 + 1.0) * phase.cos(),
                    _ => {
                        let k = 3.0 * PI;
                        0.3 * (k * u2 * phase.cos() - k * k * (u1 + 1.0).powi(2) * phase.sin())
                    }
                }
            }
        }
    }

    /// Samples of `f^(d)` on `t_i = i/T`.
    pub fn sample(&self, grid: usize, d: u32) -> Vec<f64> {
        (0..grid)
            .map(|i| self.derivative(i as f64 / grid as f64, d))
            .collect()
    }

    /// Fourier coefficients of `f` on `-band..=band`.
    ///
    /// Wave and Parabolas are exact. TimeShiftedSine uses the trapezoidal rule on
    /// 2^16 points, which is spectrally accurate for a periodic function this smooth.
    pub fn fourier(&self, band: i64) -> FourierSeries {
        match self {
            TestFunction::Wave => FourierSeries::from_fn(band, |l| {
                let c = match l.abs() {
                    0 => 0.5,
                    2 => 0.1,
                    12 => 0.05,
                    _ => 0.0,
                };
                Complex64::new(c, 0.0)
            }),
            TestFunction::Parabolas => FourierSeries::from_fn(band, parabolas_coefficient),
            TestFunction::TimeShiftedSine => {
                assert!(
                    2 * band < QUADRATURE_GRID as i64,
                    "band {band} too large for the quadrature grid"
                );
                FourierSeries::from_grid(&self.sample(QUADRATURE_GRID, 0)).with_band(band)
            }
        }
    }

    /// Bound on `max_i |S_B f(t_i) - f(t_i)|` for the band `B = T/2 - 1` used on a `T`-point grid.
    pub fn band_limitation_tolerance(&self, grid: usize) -> f64 {
        match self {
            TestFunction::Wave => 1e-12,
            TestFunction::Parabolas => {
                // |FT(f)(l)| <= Σ|jump of f''| / (2π|l|)³, summed over the discarded tail
                let jumps: f64 = PARABOLA_KNOTS.iter().map(|(_, c)| 2.0 * c.abs()).sum();
                let b = (grid / 2 - 1) as f64;
                2.0 * jumps / (2.0 * PI).powi(3) / (2.0 * b * b) + 1e-12
            }
            TestFunction::TimeShiftedSine => 1e-9,
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

pub fn test_function(name: &str) -> Result<TestFunction> {
    name.parse()
}

/// `u = g∘g∘g∘g` with its first two derivatives.
fn warp(t: f64) -> (f64, f64, f64) {
    let (mut u, mut u1, mut u2) = (t, 1.0, 0.0);
    for _ in 0..4 {
        let g = (1.0 - (PI * u).cos()) / 2.0;
        let g1 = PI / 2.0 * (PI * u).sin();
        let g2 = PI * PI / 2.0 * (PI * u).cos();
        u2 = g2 * u1 * u1 + g1 * u2;
        u1 *= g1;
        u = g;
    }
    (u, u1, u2)
}

fn parabolas_coefficient(l: i64) -> Complex64 {
    if l == 0 {
        let mean: f64 = PARABOLA_KNOTS
            .iter()
            .map(|(a, c)| c * (1.0 - a).powi(3) / 3.0)
            .sum();
        return Complex64::new(0.8 + mean, 0.0);
    }
    let w = 2.0 * PI * l as f64;
    let i = Complex64::i();
    // antiderivative of u² e^{-iωu}
    let anti =
        |u: f64| (-i * w * u).exp() * (i * u * u / w + 2.0 * u / (w * w) - 2.0 * i / (w * w * w));
    PARABOLA_KNOTS
        .iter()
        .map(|&(a, c)| c * (-i * w * a).exp() * (anti(1.0 - a) - anti(0.0)))
        .sum()
}

/// A PSNR value; `Exact` when the estimate matches the truth on every sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Db(f64),
    Exact,
}

impl Psnr {
    /// Decibels, with `Exact` mapped to `+∞`.
    pub fn db(&self) -> f64 {
        match self {
            Psnr::Db(v) => *v,
            Psnr::Exact => f64::INFINITY,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v:.6}"),
            Psnr::Exact => f.write_str("exact"),
        }
    }
}

fn check_pair(estimate: &[f64], truth: &[f64]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::arg("empty signal"));
    }
    if estimate.len() != truth.len() {
        return Err(Error::arg(format!(
            "estimate has {} samples, truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    Ok(())
}

fn squared_error(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).powi(2))
        .sum::<f64>()
        / truth.len() as f64
}

/// Root-mean-square error, relative to the peak, below which two signals count as equal.
pub const EXACT_RELATIVE_RMS: f64 = 1e-12;

/// `10 log10(max|truth|² / ((1/T) Σ (est - truth)²))`.
///
/// Returns [`Psnr::Exact`] when the RMS error is at most
/// [`EXACT_RELATIVE_RMS`] times the peak, i.e. agreement to rounding.
pub fn psnr(estimate: &[f64], truth: &[f64]) -> Result<Psnr> {
    check_pair(estimate, truth)?;
    let peak = truth.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::arg("truth is identically zero"));
    }
    let mse = squared_error(estimate, truth);
    if mse.sqrt() <= EXACT_RELATIVE_RMS * peak {
        Ok(Psnr::Exact)
    } else {
        Ok(Psnr::Db(10.0 * (peak * peak / mse).log10()))
    }
}

/// Average over replications of `(1/T) Σ (est - truth)²`.
pub fn mise(estimates: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::arg("no replications"));
    }
    let mut total = 0.0;
    for e in estimates {
        check_pair(e, truth)?;
        total += squared_error(e, truth);
    }
    Ok(total / estimates.len() as f64)
}

/// PSNR and MISE over a set of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub mise: f64,
    pub per_replication_psnr: Vec<Psnr>,
    pub per_replication_mse: Vec<f64>,
}

impl MetricReport {
    /// `psnr_db` is the mean of the per-replication PSNR values.
    pub fn new(estimates: &[Vec<f64>], truth: &[f64]) -> Result<Self> {
        let mise = mise(estimates, truth)?;
        let per_replication_psnr = estimates
            .iter()
            .map(|e| psnr(e, truth))
            .collect::<Result<Vec<_>>>()?;
        let per_replication_mse = estimates.iter().map(|e| squared_error(e, truth)).collect();
        let psnr_db =
            per_replication_psnr.iter().map(Psnr::db).sum::<f64>() / estimates.len() as f64;
        Ok(Self {
            psnr_db,
            mise,
            per_replication_psnr,
            per_replication_mse,
        })
    }
}

/// Writes `t,value` rows for `t_i = i/T`.
pub fn write_signal<W: Write>(values: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value"])?;
    let grid = values.len() as f64;
    for (i, v) in values.iter().enumerate() {
        w.write_record([format!("{}", i as f64 / grid), format!("{v:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}
