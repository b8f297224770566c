//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use deconwave::Complex64;

/// `ν(x) = x⁴(35 − 84x + 70x² − 20x³)` clipped to `[0, 1]`.
pub fn nu(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
}

/// Meyer scaling function, angular frequency.
pub fn phi_hat(w: f64) -> f64 {
    let a = w.abs();
    if a <= 2.0 * PI / 3.0 {
        1.0
    } else if a <= 4.0 * PI / 3.0 {
        (PI / 2.0 * nu(3.0 * a / (2.0 * PI) - 1.0)).cos()
    } else {
        0.0
    }
}

/// Meyer wavelet, angular frequency, with the `e^{-iω/2}` phase.
pub fn psi_hat(w: f64) -> Complex64 {
    let a = w.abs();
    let m = if a <= 2.0 * PI / 3.0 || a >= 8.0 * PI / 3.0 {
        0.0
    } else if a <= 4.0 * PI / 3.0 {
        (PI / 2.0 * nu(3.0 * a / (2.0 * PI) - 1.0)).sin()
    } else {
        (PI / 2.0 * nu(3.0 * a / (4.0 * PI) - 1.0)).cos()
    };
    Complex64::from_polar(m, -w / 2.0)
}

/// Fourier coefficient at integer `l` of the periodized atom `Σ_m 2^{j/2} b(2^j(t+m) − k)`.
pub fn atom_fourier(j: u32, k: u64, l: i64, mother: bool) -> Complex64 {
    let scale = (1u64 << j) as f64;
    let w = 2.0 * PI * l as f64 / scale;
    let shift = Complex64::from_polar(1.0, -w * k as f64);
    let window = if mother { psi_hat(w) } else { Complex64::new(phi_hat(w), 0.0) };
    shift * window / scale.sqrt()
}

/// Sample mean, variance, skewness and excess kurtosis.
pub fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (mean, m2 * n / (n - 1.0), m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}
