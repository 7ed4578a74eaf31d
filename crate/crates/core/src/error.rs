use thiserror::Error;

pub type Result<T> = std::result::Result<T, ExnerError>;

#[derive(Debug, Error)]
pub enum ExnerError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} requires {requirement}, got {value}")]
    Domain {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("characteristic polynomial has complex roots (discriminant {discriminant:e})")]
    LossOfHyperbolicity { discriminant: f64 },

    #[error("zero pivot at row {row} in tridiagonal solve")]
    SingularSystem { row: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("non-physical water depth {h:e} in cell {cell}")]
    NegativeDepth { cell: usize, h: f64 },

    #[error("state is dry everywhere, no wave speed to bound the time step")]
    DryState,

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("inconsistent state: {0}")]
    Consistency(String),

    #[error("measurement failed: {0}")]
    Measurement(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl ExnerError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        ExnerError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
