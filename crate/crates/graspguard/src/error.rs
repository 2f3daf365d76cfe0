//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value violates a documented precondition (positivity, ordering, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The cost matrix of a quadratic program is not positive definite.
    #[error("cost matrix is not positive definite")]
    NotPositiveDefinite,

    /// Internal solver safeguard tripped; indicates a bug, not bad input.
    #[error("solver contract violation: {0}")]
    Solver(String),

    /// A Cartesian target lies outside the finger workspace.
    #[error("unreachable target: {0}")]
    Unreachable(String),

    /// Regression or estimation input carries no usable signal.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Scenario configuration failed validation; one message per finding.
    #[error("invalid scenario: {}", .0.join("; "))]
    Scenario(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("TOML error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
