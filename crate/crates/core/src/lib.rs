//! Adaptive block-thresholded wavelet deconvolution for multichannel data.
//!
//! A 1-periodic function `f` is observed through `n` channels, each blurred by a
//! known ordinary-smooth kernel `g_v` and corrupted by Gaussian white noise. This
//! crate estimates `f` or one of its derivatives `f^(d)` with a periodized Meyer
//! wavelet basis and block James-Stein shrinkage, working entirely in the Fourier
//! domain where both the model and the basis are exact.
//!
//! Module map:
//!
//! - [`series`]: Fourier-series container and grid conversion.
//! - [`meyer`]: Meyer windows, support sets, analysis and synthesis.
//! - [`model`]: blurring kernels, channel aggregation and the observation simulator.
//! - [`estimators`]: empirical coefficients, level plans, shrinkage rules and the full estimator.
//! - [`signals`]: test functions and quality metrics.
//! - [`bench`]: experiment runner, rate exponents and CSV emission.

pub mod bench;
pub mod error;
pub mod estimators;
pub mod meyer;
pub mod model;
pub mod series;
pub mod signals;

pub use error::{Error, Result};
pub use num_complex::Complex64;
