//! End-to-end approximation jobs: the pipeline, a content-addressed run
//! store and the HTTP service.

pub mod error;
pub mod grid;
pub mod http;
pub mod pipeline;
pub mod request;
pub mod result;
pub mod store;

pub use error::{ApiError, Result};
pub use grid::{Grid, GridSpec};
pub use pipeline::{contained, evaluate_surface, refine, Pipeline, Prepared};
pub use request::{ApproximationRequest, ProblemSource, Task, SCHEMA_VERSION};
pub use result::{
    ApproximationResult, Diagnostics, JobStatus, Mesh, MeshPoint, Output, SolverReport,
    SurfaceKind, Timings,
};
pub use store::{DirStore, MemoryStore, RunStore};
