use thiserror::Error;

/// Errors raised by the estimation pipeline and its supporting machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A Fourier series does not reach the frequencies an operation needs.
    #[error("frequency coverage: need |l| <= {needed}, series covers |l| <= {available}")]
    Coverage { needed: i64, available: i64 },

    /// The evaluation grid cannot represent the highest frequency in play.
    #[error("grid of {grid} points aliases frequencies up to |l| = {max_freq}")]
    Aliasing { grid: usize, max_freq: i64 },

    /// A blurring kernel vanishes (or is undefined) at a frequency that must be inverted.
    #[error("kernel for channel {channel} is not invertible at l = {freq}")]
    NotInvertible { channel: usize, freq: i64 },

    /// Synthesis produced a non-negligible imaginary part for a signal expected to be real.
    #[error("imaginary residue {residue:e} exceeds bound {bound:e}")]
    ImaginaryResidue { residue: f64, bound: f64 },

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for errors that stem from the numbers rather than from files or configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Argument(_)
                | Error::Coverage { .. }
                | Error::Aliasing { .. }
                | Error::NotInvertible { .. }
                | Error::ImaginaryResidue { .. }
        )
    }
}
