use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("model `{0}` has no closed-form invariant density")]
    NoExactSolution(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trajectory blew up at step {step}: state {state:?}")]
    BlowUp { step: u64, state: Vec<f64> },

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("point {0:?} is not a grid node")]
    NotGridAligned(Vec<f64>),

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no reference point was visited; increase the horizon or the neighborhood radius")]
    NoVisits,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
