use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of bounds: {reason}")]
    OutOfBounds { index: usize, reason: String },

    /// The all-pass normalisation sum `1 + sum(w)` is too close to zero to read a delay from.
    #[error("degenerate coefficients: normalisation sum {sum:e} within guard {guard:e}")]
    DegenerateCoefficients { sum: f64, guard: f64 },

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("diverged at sample {index}")]
    Divergence { index: usize },

    #[error("campaign failed: all {realizations} realizations diverged")]
    CampaignFailed { realizations: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
