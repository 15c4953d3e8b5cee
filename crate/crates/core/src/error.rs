use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not of Clifford type (residual {residual:.3e} > tol {tol:.3e})")]
    NotCliffordType { residual: f64, tol: f64 },

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("weight at index {index} is not positive ({value})")]
    WeightNonPositive { index: usize, value: f64 },

    #[error("truncation too small: tail estimate {tail:.3e} exceeds {tol:.3e}")]
    TruncationTooSmall { tail: f64, tol: f64 },

    #[error("series terms are not decaying at the cutoff (index {index})")]
    SeriesNotDecaying { index: usize },

    #[error("quadrature did not converge: {computed_a} vs {computed_b} at {context}")]
    QuadratureNonConvergence { computed_a: f64, computed_b: f64, context: String },

    #[error("memory cap exceeded: {needed} entries requested, cap {cap}")]
    MemoryCap { needed: usize, cap: usize },

    #[error("states do not share labels or truncation: {0}")]
    LabelMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
