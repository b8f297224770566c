//! Forward model: ordinary-smooth blurring kernels, channel aggregation and the
//! exact Fourier-domain observation simulator.
//!
//! In the Fourier domain the multichannel model reduces to
//!
//! ```text
//! y_{l,v} = FT(f)(l) · FT(g_v)(l) + ε · e_{l,v}
//! ```
//!
//! with `e_{0,v}` real standard normal and, for `l > 0`, `e_{l,v} = (a + ib)/√2`
//! (`a`, `b` independent standard normals) and `e_{-l,v} = conj(e_{l,v})`, so that
//! every observation is the spectrum of a real process and `E|e_{l,v}|² = 1`.

pub mod io;

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::series::FourierSeries;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelResponse {
    /// Periodized two-sided exponential `g(t) = τ^{-1} Σ_m e^{-|t+m|/τ}`,
    /// with `FT(g)(l) = 2 / (1 + 4π²l²τ²)`.
    Laplacian { tau: f64 },
    /// Fourier coefficients given explicitly on a band.
    Tabulated(FourierSeries),
}

/// A blurring kernel with its ordinary-smoothness parameters `(σ, δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    sigma: f64,
    delta: f64,
    response: KernelResponse,
}

impl BlurKernel {
    /// Laplacian kernel with scale `tau`; satisfies the smoothness bounds with
    /// `δ = 2`, `σ = 2πτ` and `c_g = C_g = 2`.
    pub fn laplacian(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::arg(format!(
                "laplacian scale must be positive, got {tau}"
            )));
        }
        Ok(Self {
            sigma: 2.0 * PI * tau,
            delta: 2.0,
            response: KernelResponse::Laplacian { tau },
        })
    }

    /// Laplacian kernel parameterized by `σ` instead of `τ`.
    pub fn laplacian_sigma(sigma: f64) -> Result<Self> {
        Self::laplacian(sigma / (2.0 * PI))
    }

    pub fn tabulated(sigma: f64, delta: f64, response: FourierSeries) -> Result<Self> {
        if !(sigma >= 0.0) || !(delta > 1.0) {
            return Err(Error::arg(format!(
                "kernel needs sigma >= 0 and delta > 1, got sigma={sigma} delta={delta}"
            )));
        }
        Ok(Self {
            sigma,
            delta,
            response: KernelResponse::Tabulated(response),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn response_kind(&self) -> &KernelResponse {
        &self.response
    }

    /// `FT(g)(l)`, or `None` where a tabulated kernel is undefined.
    pub fn fourier(&self, l: i64) -> Option<Complex64> {
        match &self.response {
            KernelResponse::Laplacian { tau } => {
                let x = 2.0 * PI * l as f64 * tau;
                Some(Complex64::new(2.0 / (1.0 + x * x), 0.0))
            }
            KernelResponse::Tabulated(series) => series.get(l),
        }
    }

    /// The kernel's coefficients on `-band..=band`.
    pub fn fourier_series(&self, band: i64) -> Result<FourierSeries> {
        if let KernelResponse::Tabulated(series) = &self.response {
            if series.band() < band {
                return Err(Error::Coverage {
                    needed: band,
                    available: series.band(),
                });
            }
        }
        Ok(FourierSeries::from_fn(band, |l| {
            self.fourier(l).unwrap_or_default()
        }))
    }

    /// Aggregation weight `(1 + σ²)^{-δ}`.
    pub fn weight(&self) -> f64 {
        (1.0 + self.sigma * self.sigma).powf(-self.delta)
    }

    /// Same kernel with its response tabulated on `-band..=band`.
    pub fn tabulate(&self, band: i64) -> Result<Self> {
        Ok(Self {
            sigma: self.sigma,
            delta: self.delta,
            response: KernelResponse::Tabulated(self.fourier_series(band)?),
        })
    }

    /// Replaces one coefficient (both `l` and `-l`, keeping the kernel real).
    pub fn with_coefficient(mut self, l: i64, value: Complex64) -> Result<Self> {
        let mut table = match &self.response {
            KernelResponse::Tabulated(s) => s.clone(),
            KernelResponse::Laplacian { .. } => self.fourier_series(l.abs())?,
        };
        if l.abs() > table.band() {
            table = table.with_band(l.abs());
        }
        table.set(l, value);
        if l != 0 {
            table.set(-l, value.conj());
        }
        self.response = KernelResponse::Tabulated(table);
        Ok(self)
    }
}

/// Which side of the ordinary-smoothness sandwich failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessViolation {
    pub freq: i64,
    pub side: BoundSide,
    pub modulus: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    pub checked: usize,
    pub first_violation: Option<SmoothnessViolation>,
}

impl SmoothnessReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `c_g (1+σ²l²)^{-δ/2} <= |FT(g)(l)| <= C_g (1+σ²l²)^{-δ/2}` for each `l` in `band`.
///
/// Comparisons carry a relative slack of `1e-12` so that kernels meeting a bound
/// with equality (the Laplacian with `c_g = C_g = 2`) pass despite rounding.
pub fn ordinary_smoothness_check(
    kernel: &BlurKernel,
    c_lower: f64,
    c_upper: f64,
    band: RangeInclusive<i64>,
) -> Result<SmoothnessReport> {
    if band.is_empty() {
        return Err(Error::arg("empty frequency band"));
    }
    if !(c_lower > 0.0 && c_upper >= c_lower) {
        return Err(Error::arg(format!(
            "need 0 < c_g <= C_g, got c_g={c_lower} C_g={c_upper}"
        )));
    }
    const SLACK: f64 = 1e-12;
    let mut checked = 0;
    for l in band {
        let profile = (1.0 + kernel.sigma.powi(2) * (l as f64).powi(2)).powf(-kernel.delta / 2.0);
        let modulus = kernel.fourier(l).map_or(0.0, |g| g.norm());
        checked += 1;
        let lower = c_lower * profile;
        let upper = c_upper * profile;
        let violation = if modulus < lower * (1.0 - SLACK) {
            Some((BoundSide::Lower, lower))
        } else if modulus > upper * (1.0 + SLACK) {
            Some((BoundSide::Upper, upper))
        } else {
            None
        };
        if let Some((side, limit)) = violation {
            return Ok(SmoothnessReport {
                checked,
                first_violation: Some(SmoothnessViolation {
                    freq: l,
                    side,
                    modulus,
                    limit,
                }),
            });
        }
    }
    Ok(SmoothnessReport {
        checked,
        first_violation: None,
    })
}

/// `ρ_n = Σ_v (1 + σ_v²)^{-δ}`.
pub fn rho(kernels: &[BlurKernel]) -> Result<f64> {
    check_kernels(kernels)?;
    Ok(kernels.iter().map(BlurKernel::weight).sum())
}

/// `ρ*_n = Σ_v σ_v^{-2δ}`, the aggregation quantity of the lower bound.
pub fn rho_star(kernels: &[BlurKernel]) -> Result<f64> {
    check_kernels(kernels)?;
    Ok(kernels.iter().map(|k| k.sigma.powf(-2.0 * k.delta)).sum())
}

fn check_kernels(kernels: &[BlurKernel]) -> Result<()> {
    let first = kernels.first().ok_or_else(|| Error::arg("no channels"))?;
    if kernels.iter().any(|k| k.delta != first.delta) {
        return Err(Error::arg("all channels must share the same delta"));
    }
    Ok(())
}

/// The `n` channels of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    kernels: Vec<BlurKernel>,
    rho_n: f64,
}

impl ChannelSet {
    pub fn new(kernels: Vec<BlurKernel>) -> Result<Self> {
        let rho_n = rho(&kernels)?;
        Ok(Self { kernels, rho_n })
    }

    /// Laplacian channels from their `σ_v`.
    pub fn laplacian_sigmas(sigmas: &[f64]) -> Result<Self> {
        Self::new(
            sigmas
                .iter()
                .map(|&s| BlurKernel::laplacian_sigma(s))
                .collect::<Result<_>>()?,
        )
    }

    pub fn kernels(&self) -> &[BlurKernel] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn rho_n(&self) -> f64 {
        self.rho_n
    }

    pub fn rho_star(&self) -> f64 {
        rho_star(&self.kernels).expect("validated at construction")
    }

    pub fn delta(&self) -> f64 {
        self.kernels[0].delta
    }

    pub fn weights(&self) -> Vec<f64> {
        self.kernels.iter().map(BlurKernel::weight).collect()
    }

    pub fn concat(&self, other: &ChannelSet) -> Result<Self> {
        let mut kernels = self.kernels.clone();
        kernels.extend(other.kernels.iter().cloned());
        Self::new(kernels)
    }
}

/// Fourier-domain observations `y_{l,v}` for every channel on `-band..=band`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    channels: Vec<FourierSeries>,
    epsilon: f64,
    seed: u64,
    replication: u64,
}

impl ObservationSet {
    pub fn new(
        channels: Vec<FourierSeries>,
        epsilon: f64,
        seed: u64,
        replication: u64,
    ) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::arg("no channels"))?;
        if channels.iter().any(|c| c.band() != first.band()) {
            return Err(Error::arg("all channels must share the same band"));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::arg(format!(
                "noise level must be non-negative, got {epsilon}"
            )));
        }
        Ok(Self {
            channels,
            epsilon,
            seed,
            replication,
        })
    }

    pub fn band(&self) -> i64 {
        self.channels[0].band()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replication(&self) -> u64 {
        self.replication
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Observations of channel `v` (0-based).
    pub fn channel(&self, v: usize) -> &FourierSeries {
        &self.channels[v]
    }

    pub fn channels(&self) -> &[FourierSeries] {
        &self.channels
    }

    pub fn get(&self, l: i64, v: usize) -> Option<Complex64> {
        self.channels.get(v).and_then(|c| c.get(l))
    }

    pub fn is_hermitian(&self) -> bool {
        self.channels.iter().all(FourierSeries::is_hermitian)
    }
}

/// Independent random stream for replication `replication` under master `seed`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Simulates the observations on the band of `f_hat` (replication 0 of `seed`).
pub fn simulate(
    f_hat: &FourierSeries,
    channels: &ChannelSet,
    epsilon: f64,
    seed: u64,
) -> Result<ObservationSet> {
    simulate_replication(f_hat, channels, epsilon, seed, 0)
}

pub fn simulate_replication(
    f_hat: &FourierSeries,
    channels: &ChannelSet,
    epsilon: f64,
    seed: u64,
    replication: u64,
) -> Result<ObservationSet> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::arg(format!(
            "noise level must be finite and >= 0, got {epsilon}"
        )));
    }
    let band = f_hat.band();
    let mut rng = replication_rng(seed, replication);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(channels.len());
    for kernel in channels.kernels() {
        let g = kernel.fourier_series(band)?;
        let mut y = FourierSeries::zeros(band);
        let e0: f64 = rng.sample(StandardNormal);
        y.set(0, f_hat.at(0) * g.at(0) + epsilon * e0);
        for l in 1..=band {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let e = Complex64::new(a * scale, b * scale);
            y.set(l, f_hat.at(l) * g.at(l) + e * epsilon);
            y.set(-l, f_hat.at(-l) * g.at(-l) + e.conj() * epsilon);
        }
        out.push(y);
    }
    ObservationSet::new(out, epsilon, seed, replication)
}

/// Noise-free blurred signal `f ⋆ g` on `t_i = i/T`.
pub fn blurred_signal(f_hat: &FourierSeries, kernel: &BlurKernel, grid: usize) -> Result<Vec<f64>> {
    let band = f_hat.band().min((grid as i64 - 1) / 2);
    let g = kernel.fourier_series(band)?;
    FourierSeries::from_fn(band, |l| f_hat.at(l) * g.at(l)).to_grid(grid)
}

/// Noise standard deviation giving the requested blurred signal-to-noise ratio:
/// `ε = sqrt(Σ_i b_i² / (T · 10^{BSNR/10}))`.
pub fn bsnr_to_epsilon(blurred: &[f64], bsnr_db: f64) -> Result<f64> {
    if blurred.is_empty() {
        return Err(Error::arg("empty blurred signal"));
    }
    let energy: f64 = blurred.iter().map(|b| b * b).sum();
    if energy == 0.0 {
        return Err(Error::arg("blurred signal has zero energy"));
    }
    Ok((energy / (blurred.len() as f64 * 10f64.powf(bsnr_db / 10.0))).sqrt())
}

/// `n` smoothness parameters drawn i.i.d. uniform on `(0, sigma_max]`.
///
/// The draw is prefix-stable: the first `m` values for `n > m` equal the draw for `m`.
pub fn random_sigmas(n: usize, sigma_max: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (1.0 - u) * sigma_max
        })
        .collect()
}
