use polypareto_conic::{SolveError, SolveStatus};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid problem: {}", .0.join("; "))]
    InvalidMolp(Vec<String>),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("compactness bound {bound} is below the required {required}")]
    InvalidBound { bound: f64, required: f64 },
    #[error("region is empty")]
    EmptyRegion,
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unsupported shape constraint: {0}")]
    UnsupportedShape(String),
    #[error("plan does not fit this builder: {0}")]
    IncompatiblePlan(String),
    #[error("solution status {0:?} carries no decision rule")]
    BadStatus(SolveStatus),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("restricted feasible set is empty")]
    Infeasible,
}

impl From<SolveError> for Error {
    fn from(e: SolveError) -> Self {
        Error::SolverFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
