//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("problem too large: n = {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("kappa must be positive, got {0}")]
    InvalidKappa(f64),

    #[error("spin value at index {index} must be -1 or +1")]
    InvalidSpin { index: usize },

    #[error("state vector is not normalized (norm deviates by {deviation:e})")]
    NotNormalized { deviation: f64 },

    #[error("constraint row {row} is already active")]
    AlreadyActive { row: usize },

    #[error("reference optimum must be positive, got {0}")]
    NonPositiveOpt(f64),

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
