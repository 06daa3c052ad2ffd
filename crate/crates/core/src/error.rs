use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfsError {
    /// Malformed input: wrong shapes, non-orthonormal vectors, bad parameters.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operator would leave the admissible set (too many eigenvalues of one sign).
    #[error("constraint error: {0}")]
    Constraint(String),

    /// The operator has no nonzero spectrum where one is required.
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    /// Rescaling cannot reach the requested constraint values.
    #[error("projection failure: {0}")]
    Projection(String),

    /// Constraint targets cannot be met by any measure in the parameter family.
    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    /// Reading or writing a file failed.
    #[error("io error: {0}")]
    Io(String),

    /// A Gram matrix is singular or too badly conditioned to invert.
    #[error("ill-conditioned basis: condition number {condition:e}")]
    IllConditioned { condition: f64 },
}

pub type Result<T> = std::result::Result<T, CfsError>;

pub(crate) fn validation(msg: impl Into<String>) -> CfsError {
    CfsError::Validation(msg.into())
}
