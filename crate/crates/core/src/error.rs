use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("row {row} is not a probability vector: {reason}")]
    NotSimplex { row: usize, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("zero probability at state {state}, action {action} where a logarithm is required")]
    ZeroProbability { state: usize, action: usize },

    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("design matrix is rank deficient and no ridge term was supplied")]
    DegenerateDesign,

    #[error("fixture parse error: {0}")]
    Fixture(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        name,
        reason: reason.into(),
    }
}
