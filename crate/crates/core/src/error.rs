use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate (agent {index})")]
    NonFinite { index: usize },

    #[error("agent index {index} out of range for ensemble of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("sample of agent indices is empty")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
