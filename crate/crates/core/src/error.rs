use std::fmt;

use thiserror::Error;

use crate::field::Representation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("representation mismatch: expected {expected}, found {found}")]
    RepresentationMismatch {
        expected: Representation,
        found: Representation,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} requires a spectral operator")]
    SpectralOnly(&'static str),

    #[error("Cholesky factorization failed at pivot {index} (value {value})")]
    Factorization { index: usize, value: f64 },

    #[error("non-finite state after step {step} ({detail})")]
    NonFinite { step: usize, detail: String },

    #[error("rate fit refused: {0}")]
    FitRefused(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidArgument(msg.to_string())
    }
}
