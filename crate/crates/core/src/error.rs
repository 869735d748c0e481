use thiserror::Error;

/// Errors produced by the detection pipeline and its oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {deviation:e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:e}, tolerance {tolerance:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),

    #[error("degenerate tail eigenvalue: |lambda_{index}| = {value:e} is numerically zero")]
    DegenerateTailEigenvalue { index: usize, value: f64 },

    #[error(
        "eigenvalues lambda_K and lambda_(K+1) are not simple in magnitude; gradient undefined"
    )]
    NotDifferentiable,

    #[error("insufficient Monte-Carlo precision: {samples} samples requested, at least {minimum} required")]
    InsufficientSamples { samples: usize, minimum: usize },

    #[error("signal-to-noise ratio {tau} is at or below the threshold K = {k}; limiting centers are undefined")]
    BelowThreshold { tau: f64, k: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
