//! Periodized Meyer wavelets, handled entirely in the Fourier domain.
//!
//! The father and mother wavelets are band-limited: `FT(φ)` lives on
//! `[-4π/3, 4π/3]` and `FT(ψ)` on `±[2π/3, 8π/3]`. After dilation and
//! periodization, the atom `b_{j,k}` has Fourier coefficients
//!
//! ```text
//! FT(b_{j,k})(l) = 2^{-j/2} · e^{-2πilk/2^j} · W(2πl/2^j)
//! ```
//!
//! which are non-zero only on a small, explicit set of integers. Analysis and
//! synthesis are therefore finite sums over those sets, with no filter bank and
//! no discretization of the wavelets themselves.
//!
//! The transition ramps use the polynomial family
//! `ν_m(x) = x^{m+1} Σ_{k=0}^{m} C(m+k, k) (1-x)^k`, which satisfies
//! `ν(x) + ν(1-x) = 1` and gives `C^m` windows. The default `m = 3` is
//! `ν(x) = x⁴(35 − 84x + 70x² − 20x³)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{derivative_factor, real_part_checked, FourierSeries};

/// Shape of the Meyer transition ramps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeyerWindow {
    auxiliary_degree: u32,
}

impl Default for MeyerWindow {
    fn default() -> Self {
        Self {
            auxiliary_degree: 3,
        }
    }
}

impl MeyerWindow {
    pub fn new(auxiliary_degree: u32) -> Self {
        Self { auxiliary_degree }
    }

    pub fn auxiliary_degree(&self) -> u32 {
        self.auxiliary_degree
    }

    /// Smoothness order `m` of the Fourier windows; derivatives up to `d <= m` are supported.
    pub fn smoothness(&self) -> u32 {
        self.auxiliary_degree
    }

    /// The auxiliary ramp: 0 below 0, 1 above 1.
    pub fn nu(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let m = self.auxiliary_degree as i32;
        let y = 1.0 - x;
        let mut sum = 0.0;
        let mut binom = 1.0;
        let mut ypow = 1.0;
        for k in 0..=m {
            sum += binom * ypow;
            binom = binom * f64::from(m + k + 1) / f64::from(k + 1);
            ypow *= y;
        }
        x.powi(m + 1) * sum
    }

    /// `sin(π/2 · ν(x))`, exactly 0 at `x <= 0` and exactly 1 at `x >= 1`.
    fn rising(&self, x: f64) -> f64 {
        (FRAC_PI_2 * self.nu(x)).sin()
    }

    /// `cos(π/2 · ν(x))`, written as a sine so that it is exactly 0 at `x >= 1`.
    fn falling(&self, x: f64) -> f64 {
        (FRAC_PI_2 * (1.0 - self.nu(x))).sin()
    }

    /// Father window as a function of `x = 3|ω|/(2π)`.
    fn phi_scaled(&self, x: f64) -> f64 {
        if x <= 1.0 {
            1.0
        } else if x >= 2.0 {
            0.0
        } else {
            self.falling(x - 1.0)
        }
    }

    /// Mother window modulus as a function of `x = 3|ω|/(2π)`.
    fn psi_scaled(&self, x: f64) -> f64 {
        if x <= 1.0 || x >= 4.0 {
            0.0
        } else if x <= 2.0 {
            self.rising(x - 1.0)
        } else {
            self.falling(x / 2.0 - 1.0)
        }
    }

    /// `FT(φ)(ω)` for angular frequency `ω`.
    pub fn phi_hat(&self, omega: f64) -> f64 {
        self.phi_scaled(3.0 * omega.abs() / (2.0 * PI))
    }

    /// `|FT(ψ)(ω)|`.
    pub fn psi_hat_modulus(&self, omega: f64) -> f64 {
        self.psi_scaled(3.0 * omega.abs() / (2.0 * PI))
    }

    /// `FT(ψ)(ω) = e^{-iω/2} |FT(ψ)(ω)|`.
    pub fn psi_hat(&self, omega: f64) -> Complex64 {
        let m = self.psi_hat_modulus(omega);
        if m == 0.0 {
            return Complex64::default();
        }
        Complex64::from_polar(m, -omega / 2.0)
    }

    /// Window modulus at integer frequency `l` for level `j`, evaluated without rounding
    /// in the argument (`3l/2^j` is exact in binary floating point).
    pub fn level_window(&self, kind: AtomKind, j: u32, l: i64) -> f64 {
        let x = (3 * l.abs()) as f64 / (1u64 << j) as f64;
        match kind {
            AtomKind::Father => self.phi_scaled(x),
            AtomKind::Mother => self.psi_scaled(x),
        }
    }
}

/// `FT(φ)(ω)` for the default window.
pub fn meyer_phi_hat(omega: f64) -> f64 {
    MeyerWindow::default().phi_hat(omega)
}

/// `FT(ψ)(ω)` for the default window.
pub fn meyer_psi_hat(omega: f64) -> Complex64 {
    MeyerWindow::default().psi_hat(omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Father,
    Mother,
}

/// Integer frequencies where the level-`j` atoms have non-zero Fourier coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSets {
    pub level: u32,
    /// `D_j`, support of the father atoms.
    pub approx_freqs: Vec<i64>,
    /// `C_j`, support of the mother atoms.
    pub detail_freqs: Vec<i64>,
}

pub fn support_sets(j: u32) -> SupportSets {
    support_sets_with(&MeyerWindow::default(), j)
}

pub fn support_sets_with(window: &MeyerWindow, j: u32) -> SupportSets {
    SupportSets {
        level: j,
        approx_freqs: support(window, AtomKind::Father, j),
        detail_freqs: support(window, AtomKind::Mother, j),
    }
}

fn support(window: &MeyerWindow, kind: AtomKind, j: u32) -> Vec<i64> {
    let reach = max_support_freq(kind, j) + 1;
    (-reach..=reach)
        .filter(|&l| window.level_window(kind, j, l) > 0.0)
        .collect()
}

/// Upper bound on `|l|` for the support of a level-`j` atom.
pub fn max_support_freq(kind: AtomKind, j: u32) -> i64 {
    let scale = 1i64 << j;
    match kind {
        AtomKind::Father => 2 * scale / 3,
        AtomKind::Mother => 4 * scale / 3,
    }
}

/// `FT(b_{j,k})(l)` for the periodized atom of the given kind.
pub fn periodized_basis_fourier(j: u32, k: u64, l: i64, kind: AtomKind) -> Complex64 {
    periodized_basis_fourier_with(&MeyerWindow::default(), j, k, l, kind)
}

pub fn periodized_basis_fourier_with(
    window: &MeyerWindow,
    j: u32,
    k: u64,
    l: i64,
    kind: AtomKind,
) -> Complex64 {
    assert!(k < (1u64 << j), "translate {k} out of range for level {j}");
    let w = window.level_window(kind, j, l);
    if w == 0.0 {
        return Complex64::default();
    }
    let period = 1i64 << (j + 1);
    let shift = match kind {
        AtomKind::Father => 2 * k as i64,
        AtomKind::Mother => 2 * k as i64 + 1,
    };
    let m = (l.rem_euclid(period) * shift).rem_euclid(period);
    Complex64::from_polar(
        w * (0.5f64).powf(j as f64 / 2.0),
        -PI * m as f64 / (1u64 << j) as f64,
    )
}

/// Fourier series of a single periodized atom.
pub fn atom_series(j: u32, k: u64, kind: AtomKind) -> FourierSeries {
    let band = max_support_freq(kind, j);
    FourierSeries::from_fn(band, |l| periodized_basis_fourier(j, k, l, kind))
}

/// Approximation coefficients at `j1` and detail coefficients at `j1..=j2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub j1: u32,
    pub j2: u32,
    pub alpha: Vec<Complex64>,
    /// `beta[j - j1]` holds the `2^j` detail coefficients of level `j`.
    pub beta: Vec<Vec<Complex64>>,
}

impl WaveletCoeffs {
    pub fn zeros(j1: u32, j2: u32) -> Self {
        assert!(j1 <= j2, "j1 must not exceed j2");
        Self {
            j1,
            j2,
            alpha: vec![Complex64::default(); 1 << j1],
            beta: (j1..=j2)
                .map(|j| vec![Complex64::default(); 1 << j])
                .collect(),
        }
    }

    pub fn level(&self, j: u32) -> &[Complex64] {
        &self.beta[(j - self.j1) as usize]
    }

    pub fn level_mut(&mut self, j: u32) -> &mut Vec<Complex64> {
        &mut self.beta[(j - self.j1) as usize]
    }

    /// Highest frequency touched by any atom in the level range.
    pub fn max_freq(&self) -> i64 {
        max_support_freq(AtomKind::Mother, self.j2).max(max_support_freq(AtomKind::Father, self.j1))
    }

    /// All coefficients flattened: alpha first, then each detail level.
    pub fn flatten(&self) -> Vec<Complex64> {
        let mut out = self.alpha.clone();
        for b in &self.beta {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn from_flat(j1: u32, j2: u32, flat: &[Complex64]) -> Result<Self> {
        let mut c = Self::zeros(j1, j2);
        let expected = c.flatten().len();
        if flat.len() != expected {
            return Err(Error::arg(format!(
                "expected {expected} coefficients for levels {j1}..={j2}, got {}",
                flat.len()
            )));
        }
        let (a, mut rest) = flat.split_at(c.alpha.len());
        c.alpha.copy_from_slice(a);
        for b in c.beta.iter_mut() {
            let (head, tail) = rest.split_at(b.len());
            b.copy_from_slice(head);
            rest = tail;
        }
        Ok(c)
    }
}

/// Precomputed window values and twiddles for one level and atom kind.
struct LevelAtoms {
    j: u32,
    shift: i64,
    freqs: Vec<i64>,
    /// `2^{-j/2} · W(l)` (real, non-negative).
    weights: Vec<f64>,
    /// `e^{-iπm/2^j}` for `m` in `0..2^{j+1}`.
    twiddles: Vec<Complex64>,
}

impl LevelAtoms {
    fn new(window: &MeyerWindow, kind: AtomKind, j: u32) -> Self {
        let norm = (0.5f64).powf(j as f64 / 2.0);
        let reach = max_support_freq(kind, j) + 1;
        let (freqs, weights): (Vec<i64>, Vec<f64>) = (-reach..=reach)
            .map(|l| (l, window.level_window(kind, j, l)))
            .filter(|&(_, w)| w > 0.0)
            .map(|(l, w)| (l, w * norm))
            .unzip();
        let period = 1usize << (j + 1);
        let half = (1u64 << j) as f64;
        let twiddles = (0..period)
            .map(|m| Complex64::from_polar(1.0, -PI * m as f64 / half))
            .collect();
        Self {
            j,
            shift: match kind {
                AtomKind::Father => 0,
                AtomKind::Mother => 1,
            },
            freqs,
            weights,
            twiddles,
        }
    }

    fn phase_index(&self, l: i64, k: usize) -> usize {
        let period = 1i64 << (self.j + 1);
        (l.rem_euclid(period) * (2 * k as i64 + self.shift)).rem_euclid(period) as usize
    }

    /// `Σ_l F(l) · conj(FT(b_{j,k})(l))` for every `k`.
    fn analyze(&self, f: impl Fn(i64) -> Complex64) -> Vec<Complex64> {
        let values: Vec<Complex64> = self
            .freqs
            .iter()
            .zip(&self.weights)
            .map(|(&l, &w)| f(l) * w)
            .collect();
        (0..1usize << self.j)
            .map(|k| {
                self.freqs
                    .iter()
                    .zip(&values)
                    .map(|(&l, v)| v * self.twiddles[self.phase_index(l, k)].conj())
                    .sum()
            })
            .collect()
    }

    /// Adds `Σ_k c_k FT(b_{j,k})(l)` into `out`.
    fn synthesize_into(&self, coeffs: &[Complex64], out: &mut FourierSeries) {
        for (&l, &w) in self.freqs.iter().zip(&self.weights) {
            let acc: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * self.twiddles[self.phase_index(l, k)])
                .sum();
            let cur = out.at(l);
            out.set(l, cur + acc * w);
        }
    }
}

/// Exact wavelet coefficients of `f^(d)` over levels `j1..=j2`.
pub fn analyze(f_hat: &FourierSeries, j1: u32, j2: u32, d: u32) -> Result<WaveletCoeffs> {
    analyze_with(&MeyerWindow::default(), f_hat, j1, j2, d)
}

pub fn analyze_with(
    window: &MeyerWindow,
    f_hat: &FourierSeries,
    j1: u32,
    j2: u32,
    d: u32,
) -> Result<WaveletCoeffs> {
    if j1 > j2 {
        return Err(Error::arg(format!("j1 = {j1} exceeds j2 = {j2}")));
    }
    let needed = max_support_freq(AtomKind::Mother, j2).max(max_support_freq(AtomKind::Father, j1));
    if f_hat.band() < needed {
        return Err(Error::Coverage {
            needed,
            available: f_hat.band(),
        });
    }
    let source = |l: i64| f_hat.at(l) * derivative_factor(l, d);
    let alpha = LevelAtoms::new(window, AtomKind::Father, j1).analyze(source);
    let beta = (j1..=j2)
        .map(|j| LevelAtoms::new(window, AtomKind::Mother, j).analyze(source))
        .collect();
    Ok(WaveletCoeffs {
        j1,
        j2,
        alpha,
        beta,
    })
}

/// Single coefficient `Σ_l F(l) · conj(FT(b_{j,k})(l))` computed term by term.
pub fn coefficient(f_hat: &FourierSeries, j: u32, k: u64, kind: AtomKind, d: u32) -> Complex64 {
    f_hat
        .iter()
        .map(|(l, c)| c * derivative_factor(l, d) * periodized_basis_fourier(j, k, l, kind).conj())
        .sum()
}

/// Fourier series of `Σ α φ_{j1,k} + Σ β ψ_{j,k}`.
pub fn synthesize_series(coeffs: &WaveletCoeffs) -> FourierSeries {
    synthesize_series_with(&MeyerWindow::default(), coeffs)
}

pub fn synthesize_series_with(window: &MeyerWindow, coeffs: &WaveletCoeffs) -> FourierSeries {
    let mut out = FourierSeries::zeros(coeffs.max_freq());
    LevelAtoms::new(window, AtomKind::Father, coeffs.j1).synthesize_into(&coeffs.alpha, &mut out);
    for j in coeffs.j1..=coeffs.j2 {
        LevelAtoms::new(window, AtomKind::Mother, j).synthesize_into(coeffs.level(j), &mut out);
    }
    out
}

/// Evaluates the wavelet expansion on `t_i = i/T`; requires `T > 2·max|l|`.
pub fn synthesize_complex(coeffs: &WaveletCoeffs, grid: usize) -> Result<Vec<Complex64>> {
    let max_freq = coeffs.max_freq();
    if (grid as i64) < 2 * max_freq + 1 {
        return Err(Error::Aliasing { grid, max_freq });
    }
    synthesize_series(coeffs).to_grid_complex(grid)
}

/// Real-valued synthesis; the imaginary residue must stay at rounding level.
pub fn synthesize(coeffs: &WaveletCoeffs, grid: usize) -> Result<Vec<f64>> {
    real_part_checked(synthesize_complex(coeffs, grid)?)
}
