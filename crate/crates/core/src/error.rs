//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential sample window does not cover {0}")]
    WindowTooSmall(String),

    #[error("energy {energy} is within {dist:.3e} of the spectrum (resonant)")]
    ResonantEnergy { energy: f64, dist: f64 },

    #[error("eigensolver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("operator of dimension {dim} exceeds the dense threshold {threshold}")]
    TooLargeForDense { dim: usize, threshold: usize },

    #[error("exact enumeration of {count} sub-cubes exceeds the work budget {budget}; use sampled mode")]
    EnumerationBudget { count: u64, budget: u64 },

    #[error("operation requires a partially interactive cube, got a fully interactive one")]
    FullyInteractive,

    #[error("cube radius {radius} is not a ladder level with a predecessor (levels {levels:?})")]
    NotOnLadder { radius: i64, levels: Vec<i64> },

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
