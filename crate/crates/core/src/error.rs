use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("n must be a positive integer, got {0}")]
    InvalidDimension(usize),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("variable x{index} out of range 1..={max}")]
    VariableOutOfRange { index: usize, max: usize },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coefficient is not constant: {0}")]
    NonConstantCoefficient(String),

    #[error("2-form is degenerate or not permutation-sparse (row {row})")]
    DegenerateForm { row: usize },

    #[error("implicit midpoint did not converge in {iterations} iterations (residual {residual:e})")]
    MidpointDivergence { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("integration aborted at step {step}: {cause}")]
    Aborted {
        step: usize,
        cause: Box<Error>,
        partial: Box<Trajectory>,
    },

    #[error("malformed trajectory file: {0}")]
    MalformedTrajectory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
