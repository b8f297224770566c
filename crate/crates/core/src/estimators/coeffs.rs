//! Empirical wavelet coefficients from multichannel observations.
//!
//! Every channel is deconvolved frequency by frequency and the channels are
//! averaged with weights `(1+σ_v²)^{-δ}/ρ_n`:
//!
//! ```text
//! z(l) = ρ_n^{-1} Σ_v (1+σ_v²)^{-δ} y_{l,v} / FT(g_v)(l)
//! ```
//!
//! `z` is an unbiased estimate of `FT(f)(l)`, and projecting `(2πil)^d z` onto the
//! Meyer atoms gives the empirical coefficients of `f^(d)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::meyer::{
    self, max_support_freq, periodized_basis_fourier, AtomKind, MeyerWindow, WaveletCoeffs,
};
use crate::model::{ChannelSet, ObservationSet};
use crate::series::{derivative_factor, FourierSeries};

/// Weighted deconvolved average of the channels on `-band..=band`.
pub fn aggregate_deconvolved(
    obs: &ObservationSet,
    channels: &ChannelSet,
    band: i64,
) -> Result<FourierSeries> {
    if obs.num_channels() != channels.len() {
        return Err(Error::arg(format!(
            "{} observed channels but {} kernels",
            obs.num_channels(),
            channels.len()
        )));
    }
    if obs.band() < band {
        return Err(Error::Coverage {
            needed: band,
            available: obs.band(),
        });
    }
    let rho = channels.rho_n();
    let mut z = FourierSeries::zeros(band);
    for (v, kernel) in channels.kernels().iter().enumerate() {
        let w = kernel.weight() / rho;
        let y = obs.channel(v);
        for l in -band..=band {
            let g = kernel.fourier(l).ok_or(Error::Coverage {
                needed: band,
                available: l.abs() - 1,
            })?;
            if g == Complex64::default() {
                return Err(Error::NotInvertible {
                    channel: v + 1,
                    freq: l,
                });
            }
            let cur = z.at(l);
            z.set(l, cur + y.at(l) / g * w);
        }
    }
    Ok(z)
}

fn single(
    obs: &ObservationSet,
    channels: &ChannelSet,
    j: u32,
    k: u64,
    kind: AtomKind,
    d: u32,
) -> Result<Complex64> {
    if k >= 1 << j {
        return Err(Error::arg(format!(
            "translate {k} out of range for level {j}"
        )));
    }
    let z = aggregate_deconvolved(obs, channels, max_support_freq(kind, j))?;
    Ok(meyer::coefficient(&z, j, k, kind, d))
}

/// `α̂_{j1,k}` for `f^(d)`.
pub fn empirical_alpha(
    obs: &ObservationSet,
    channels: &ChannelSet,
    j1: u32,
    k: u64,
    d: u32,
) -> Result<Complex64> {
    single(obs, channels, j1, k, AtomKind::Father, d)
}

/// `β̂_{j,k}` for `f^(d)`.
pub fn empirical_beta(
    obs: &ObservationSet,
    channels: &ChannelSet,
    j: u32,
    k: u64,
    d: u32,
) -> Result<Complex64> {
    single(obs, channels, j, k, AtomKind::Mother, d)
}

/// All empirical coefficients over `j1..=j2`.
pub fn empirical_coeffs(
    obs: &ObservationSet,
    channels: &ChannelSet,
    window: &MeyerWindow,
    j1: u32,
    j2: u32,
    d: u32,
) -> Result<WaveletCoeffs> {
    let band = max_support_freq(AtomKind::Mother, j2).max(max_support_freq(AtomKind::Father, j1));
    let z = aggregate_deconvolved(obs, channels, band)?;
    meyer::analyze_with(window, &z, j1, j2, d)
}

/// Closed-form variance of the noise in an empirical coefficient:
///
/// ```text
/// ε² ρ_n^{-2} Σ_v (1+σ_v²)^{-2δ} Σ_l (2πl)^{2d} |FT(b_{j,k})(l)|² / |FT(g_v)(l)|²
/// ```
pub fn coefficient_noise_variance(
    channels: &ChannelSet,
    epsilon: f64,
    j: u32,
    k: u64,
    kind: AtomKind,
    d: u32,
) -> Result<f64> {
    let reach = max_support_freq(kind, j);
    let rho = channels.rho_n();
    let mut total = 0.0;
    for (v, kernel) in channels.kernels().iter().enumerate() {
        let w = kernel.weight();
        let mut per_channel = 0.0;
        for l in -reach..=reach {
            let atom = periodized_basis_fourier(j, k, l, kind).norm_sqr();
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
            per_channel += derivative_factor(l, d).norm_sqr() * atom / g;
        }
        total += w * w * per_channel;
    }
    Ok(epsilon * epsilon * total / (rho * rho))
}
