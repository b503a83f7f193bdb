use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("argument {0} outside the function domain (must be finite and non-negative)")]
    Domain(f64),

    #[error(
        "argument {value} exceeds the overflow threshold {threshold}; use the I1/I0 ratio instead"
    )]
    Overflow { value: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("Hermitian positive-definite factorization failed")]
    Factorization,

    #[error("phase is undefined for a zero inner product")]
    UndefinedPhase,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
