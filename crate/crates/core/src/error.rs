use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The input does not describe a finite rooted binary tree.
    #[error("structurally invalid tree: {0}")]
    StructuralInvalid(String),

    /// Two inputs that must describe the same object disagree.
    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed tree text.
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    /// Ties or plateaus in a series that must be in generic position.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An ODE solve could not reach the requested tolerance.
    #[error("solver failure at x = {x}: {message}")]
    SolverFailure { x: f64, message: String },

    /// A statistical test has too few counts to be meaningful.
    #[error("test undefined: {0}")]
    TestUndefined(String),

    /// Truncation losses made a result unusable.
    #[error("accuracy failure: {0}")]
    Accuracy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
