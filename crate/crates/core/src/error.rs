use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model file or model specification is malformed or violates an invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A computation would exceed the configured enumeration or state budget.
    #[error("budget exceeded: {what} needs {needed}, cap is {cap}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    /// Not enough data to produce a meaningful statistic.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}

pub type Result<T> = std::result::Result<T, Error>;
