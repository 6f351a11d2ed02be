//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input series must contain at least one sample")]
    EmptySeries,

    #[error("insufficient history: step {step} needs {needed} past samples")]
    InsufficientHistory { step: usize, needed: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("heralding impossible: norm {norm:.3e} below cutoff {cutoff:.3e}")]
    HeraldingImpossible { norm: f64, cutoff: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("target has zero norm on the evaluation phase")]
    ZeroTargetNorm,

    #[error("Fock cutoff insufficient: leakage {leakage:.3e} exceeds {limit:.3e}")]
    CutoffInsufficient { leakage: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
