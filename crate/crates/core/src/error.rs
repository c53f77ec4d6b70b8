use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step size underflow at t = {time} us (h = {step:e}, local error {error:e})")]
    StepSizeUnderflow { time: f64, step: f64, error: f64 },

    #[error("step budget of {max_steps} exhausted at t = {time} us")]
    StepBudgetExhausted { time: f64, max_steps: usize },

    #[error("steady state not reached by t = {time} us (residual {residual:e}, threshold {threshold:e})")]
    NotConverged { time: f64, residual: f64, threshold: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("memory policy: {0}")]
    MemoryPolicy(String),

    #[error("singular linear system: {0}")]
    Singular(String),
}
