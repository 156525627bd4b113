use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("planning failed: {0}")]
    Plan(#[from] polypareto::Error),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("subregion is not contained in the job's region: {0}")]
    NotContained(String),
    #[error("result has no surface: {0}")]
    NoSurface(String),
    #[error("job {0} not found")]
    NotFound(String),
    #[error("store: {0}")]
    Store(String),
}

impl ApiError {
    /// Stable machine-readable name used in HTTP error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            ApiError::Invalid(_) => "invalid",
            ApiError::Plan(_) => "plan_error",
            ApiError::SolverFailure(_) => "solver_failure",
            ApiError::BadGrid(_) => "bad_grid",
            ApiError::NotContained(_) => "not_contained",
            ApiError::NoSurface(_) => "no_surface",
            ApiError::NotFound(_) => "not_found",
            ApiError::Store(_) => "store",
        }
    }
}

impl From<polypareto_conic::SolveError> for ApiError {
    fn from(e: polypareto_conic::SolveError) -> Self {
        ApiError::SolverFailure(e.to_string())
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Store(e.to_string())
    }
}

impl From<serde_json::Error> for ApiError {
    fn from(e: serde_json::Error) -> Self {
        ApiError::Store(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ApiError>;
