use thiserror::Error;

/// Errors raised by tree, function, weight, form and spectral operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("exact count overflows 128-bit range at radius {0}")]
    OverflowAtDepth(u64),

    #[error("truncation needs {requested} vertices, budget is {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("function is not strictly positive at radius {0}")]
    NonpositiveFunction(u64),

    #[error("weight is negative at radius {0}")]
    NonpositiveWeight(u64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("test function is nonzero on the outermost sphere (radius {0})")]
    SupportTouchesBoundary(u64),

    #[error("negative bottom eigenvalue {value:e} on window ending at {window_end}")]
    NonnegativityViolated { window_end: u64, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
