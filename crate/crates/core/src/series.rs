//! Fourier-series representation of 1-periodic functions.
//!
//! A [`FourierSeries`] stores the coefficients `FT(h)(l) = ∫_0^1 h(t) e^{-2πilt} dt`
//! for every integer frequency `l` in a symmetric band `-band..=band`. Everything
//! in the crate (signals, kernels, wavelet atoms, observations) is expressed in
//! this form; the time grid `t_i = i/T` is reached only through [`FourierSeries::to_grid`].

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    band: i64,
    coeffs: Vec<Complex64>,
}

/// `(2πil)^d`, the Fourier multiplier of the `d`-th derivative.
pub fn derivative_factor(l: i64, d: u32) -> Complex64 {
    let magnitude = (2.0 * PI * l as f64).powi(d as i32);
    match d % 4 {
        0 => Complex64::new(magnitude, 0.0),
        1 => Complex64::new(0.0, magnitude),
        2 => Complex64::new(-magnitude, 0.0),
        _ => Complex64::new(0.0, -magnitude),
    }
}

impl FourierSeries {
    pub fn zeros(band: i64) -> Self {
        assert!(band >= 0, "band must be non-negative");
        Self {
            band,
            coeffs: vec![Complex64::new(0.0, 0.0); (2 * band + 1) as usize],
        }
    }

    pub fn from_fn(band: i64, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let mut s = Self::zeros(band);
        for l in -band..=band {
            s.coeffs[(l + band) as usize] = f(l);
        }
        s
    }

    /// Builds a series from coefficients ordered `l = -band, ..., band`.
    pub fn from_vec(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::arg(
                "coefficient vector must have odd length 2*band+1",
            ));
        }
        let band = (coeffs.len() / 2) as i64;
        Ok(Self { band, coeffs })
    }

    pub fn band(&self) -> i64 {
        self.band
    }

    pub fn get(&self, l: i64) -> Option<Complex64> {
        if l.abs() > self.band {
            None
        } else {
            Some(self.coeffs[(l + self.band) as usize])
        }
    }

    /// Coefficient at `l`, zero outside the stored band.
    pub fn at(&self, l: i64) -> Complex64 {
        self.get(l).unwrap_or_default()
    }

    pub fn set(&mut self, l: i64, value: Complex64) {
        assert!(
            l.abs() <= self.band,
            "frequency {l} outside band {}",
            self.band
        );
        self.coeffs[(l + self.band) as usize] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let band = self.band;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - band, *c))
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Restricts or zero-extends to a new band.
    pub fn with_band(&self, band: i64) -> Self {
        Self::from_fn(band, |l| self.at(l))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            band: self.band,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Series of the `d`-th derivative.
    pub fn derivative(&self, d: u32) -> Self {
        Self::from_fn(self.band, |l| self.at(l) * derivative_factor(l, d))
    }

    /// True when the series is that of a real-valued function.
    pub fn is_hermitian(&self) -> bool {
        (0..=self.band).all(|l| self.at(-l) == self.at(l).conj())
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest frequency with a non-zero coefficient, if any.
    pub fn effective_band(&self) -> Option<i64> {
        (0..=self.band)
            .rev()
            .find(|&l| self.at(l) != Complex64::default() || self.at(-l) != Complex64::default())
    }

    /// Evaluates the truncated series on `t_i = i/T`, `i = 0..T`.
    ///
    /// Every non-zero frequency must satisfy `2|l| < T`.
    pub fn to_grid_complex(&self, grid: usize) -> Result<Vec<Complex64>> {
        if let Some(max) = self.effective_band() {
            if 2 * max >= grid as i64 {
                return Err(Error::Aliasing {
                    grid,
                    max_freq: max,
                });
            }
        }
        let mut buf = vec![Complex64::default(); grid];
        for (l, c) in self.iter() {
            if c != Complex64::default() {
                buf[l.rem_euclid(grid as i64) as usize] += c;
            }
        }
        FftPlanner::new().plan_fft_inverse(grid).process(&mut buf);
        Ok(buf)
    }

    /// Real-valued grid evaluation; fails if the imaginary part is not negligible.
    pub fn to_grid(&self, grid: usize) -> Result<Vec<f64>> {
        let values = self.to_grid_complex(grid)?;
        real_part_checked(values)
    }

    /// Discrete Fourier coefficients `(1/T) Σ_i x_i e^{-2πil i/T}` for `|l| <= (T-1)/2`.
    pub fn from_grid_complex(samples: &[Complex64]) -> Self {
        let grid = samples.len();
        assert!(grid > 0, "empty grid");
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(grid).process(&mut buf);
        let band = ((grid - 1) / 2) as i64;
        let norm = 1.0 / grid as f64;
        Self::from_fn(band, |l| buf[l.rem_euclid(grid as i64) as usize] * norm)
    }

    pub fn from_grid(samples: &[f64]) -> Self {
        let complex: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut s = Self::from_grid_complex(&complex);
        // exact Hermitian symmetry for real input
        for l in 1..=s.band {
            let c = s.at(l);
            s.set(-l, c.conj());
        }
        let c0 = s.at(0);
        s.set(0, Complex64::new(c0.re, 0.0));
        s
    }
}

/// Drops the imaginary part of grid values, asserting it is at rounding level.
pub fn real_part_checked(values: Vec<Complex64>) -> Result<Vec<f64>> {
    let scale = values.iter().map(|c| c.re.abs()).fold(1.0, f64::max);
    let residue = values.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let bound = 1e-10 * scale;
    if residue > bound {
        return Err(Error::ImaginaryResidue { residue, bound });
    }
    Ok(values.into_iter().map(|c| c.re).collect())
}

fn combine(
    a: &FourierSeries,
    b: &FourierSeries,
    op: impl Fn(Complex64, Complex64) -> Complex64,
) -> FourierSeries {
    let band = a.band.max(b.band);
    FourierSeries::from_fn(band, |l| op(a.at(l), b.at(l)))
}

impl Add for &FourierSeries {
    type Output = FourierSeries;
    fn add(self, rhs: Self) -> FourierSeries {
        combine(self, rhs, |x, y| x + y)
    }
}

impl Sub for &FourierSeries {
    type Output = FourierSeries;
    fn sub(self, rhs: Self) -> FourierSeries {
        combine(self, rhs, |x, y| x - y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn derivative_factor_cycles_through_powers_of_i() {
        let w = 2.0 * PI * 3.0;
        assert_eq!(derivative_factor(3, 0), c(1.0, 0.0));
        assert_eq!(derivative_factor(3, 1), c(0.0, w));
        assert!((derivative_factor(3, 2) - c(-w * w, 0.0)).norm() < 1e-9);
        assert!((derivative_factor(3, 3) - c(0.0, -w * w * w)).norm() < 1e-6);
        assert_eq!(derivative_factor(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn cosine_on_grid_matches_closed_form() {
        // cos(2π·4t) has coefficients 1/2 at l = ±4
        let s = FourierSeries::from_fn(6, |l| {
            if l.abs() == 4 {
                c(0.5, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let grid = s.to_grid(64).unwrap();
        for (i, v) in grid.iter().enumerate() {
            let t = i as f64 / 64.0;
            assert!((v - (8.0 * PI * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_round_trip_recovers_coefficients() {
        let s = FourierSeries::from_fn(10, |l| c(1.0 / (1.0 + l.abs() as f64), 0.03 * l as f64));
        let samples = s.to_grid_complex(32).unwrap();
        let back = FourierSeries::from_grid_complex(&samples).with_band(10);
        assert!((&back - &s).energy().sqrt() < 1e-12);
    }

    #[test]
    fn aliasing_is_rejected() {
        let s = FourierSeries::from_fn(8, |l| if l == 8 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(s.to_grid_complex(16), Err(Error::Aliasing { .. })));
        assert!(s.to_grid_complex(17).is_ok());
    }

    #[test]
    fn non_real_series_fails_real_projection() {
        let s = FourierSeries::from_fn(2, |l| if l == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(s.to_grid(8), Err(Error::ImaginaryResidue { .. })));
    }

    #[test]
    fn from_grid_of_real_samples_is_hermitian() {
        let samples: Vec<f64> = (0..33).map(|i| ((i * i) % 7) as f64).collect();
        assert!(FourierSeries::from_grid(&samples).is_hermitian());
    }
}
