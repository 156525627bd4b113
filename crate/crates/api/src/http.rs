//! HTTP job API.
//!
//! `POST /jobs` and `POST /jobs/{id}/refine` take `?mode=sync` (default,
//! answer once the job is done) or `?mode=async` (answer 202 at once and
//! queue the job).

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use polypareto::{Region, ShapeMode};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::error::ApiError;
use crate::grid::GridSpec;
use crate::pipeline::{evaluate_surface, refine, Pipeline};
use crate::request::{ApproximationRequest, SCHEMA_VERSION};
use crate::result::JobStatus;
use crate::store::RunStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

impl From<&ApiError> for ErrorBody {
    fn from(e: &ApiError) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobInfo {
    pub v: u32,
    pub id: String,
    pub state: JobState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<JobStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineRequest {
    #[serde(default = "version")]
    pub v: u32,
    pub region: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeMode>,
}

fn version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Sync,
    Async,
}

#[derive(Debug, Default, Deserialize)]
pub struct SubmitQuery {
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Deserialize)]
pub struct SurfaceQuery {
    pub grid: String,
    #[serde(default)]
    pub oracle: bool,
}

enum Pending {
    Queued,
    Running,
    Failed(ErrorBody),
}

pub struct AppState {
    pipeline: Pipeline,
    store: Arc<dyn RunStore>,
    pending: Mutex<HashMap<String, Pending>>,
    workers: Semaphore,
}

impl AppState {
    /// `workers` bounds the number of jobs solved at once.
    pub fn new(pipeline: Pipeline, store: Arc<dyn RunStore>, workers: usize) -> Arc<Self> {
        Arc::new(Self {
            pipeline,
            store,
            pending: Mutex::new(HashMap::new()),
            workers: Semaphore::new(workers.max(1)),
        })
    }

    fn set(&self, id: &str, p: Pending) {
        self.pending.lock().expect("job table").insert(id.into(), p);
    }
}

struct HttpError(ApiError);

impl From<ApiError> for HttpError {
    fn from(e: ApiError) -> Self {
        HttpError(e)
    }
}

fn status_of(e: &ApiError) -> StatusCode {
    match e {
        ApiError::Invalid(_) | ApiError::BadGrid(_) => StatusCode::BAD_REQUEST,
        ApiError::Plan(_) | ApiError::NotContained(_) => StatusCode::UNPROCESSABLE_ENTITY,
        ApiError::NoSurface(_) => StatusCode::CONFLICT,
        ApiError::NotFound(_) => StatusCode::NOT_FOUND,
        ApiError::SolverFailure(_) | ApiError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

#[derive(Serialize)]
struct ErrorResponse {
    v: u32,
    error: ErrorBody,
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        let body = ErrorResponse {
            v: SCHEMA_VERSION,
            error: ErrorBody::from(&self.0),
        };
        (status_of(&self.0), Json(body)).into_response()
    }
}

fn parse<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, HttpError> {
    serde_json::from_slice(body).map_err(|e| HttpError(ApiError::Invalid(e.to_string())))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/jobs", post(submit))
        .route("/jobs/{id}", get(job))
        .route("/jobs/{id}/refine", post(refine_job))
        .route("/jobs/{id}/surface", get(surface))
        .with_state(state)
}

pub async fn serve(addr: &str, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

async fn run_job(state: Arc<AppState>, id: String, req: ApproximationRequest) -> JobInfo {
    let _permit = state.workers.acquire().await.expect("semaphore open");
    state.set(&id, Pending::Running);
    let worker = state.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let result = worker.pipeline.run(req)?;
        worker.store.put(&result)?;
        Ok::<_, ApiError>(result.status)
    })
    .await
    .unwrap_or_else(|e| Err(ApiError::SolverFailure(format!("job panicked: {e}"))));
    match outcome {
        Ok(status) => {
            state.pending.lock().expect("job table").remove(&id);
            JobInfo {
                v: SCHEMA_VERSION,
                id,
                state: JobState::Done,
                status: Some(status),
                error: None,
            }
        }
        Err(e) => {
            let body = ErrorBody::from(&e);
            state.set(&id, Pending::Failed(body.clone()));
            JobInfo {
                v: SCHEMA_VERSION,
                id,
                state: JobState::Failed,
                status: None,
                error: Some(body),
            }
        }
    }
}

async fn start(
    state: Arc<AppState>,
    req: ApproximationRequest,
    mode: Mode,
) -> Result<Response, HttpError> {
    let req = state.pipeline.accept(req)?;
    let id = req.job_id();
    if let Some(done) = state.store.get(&id)? {
        let info = JobInfo {
            v: SCHEMA_VERSION,
            id,
            state: JobState::Done,
            status: Some(done.status),
            error: None,
        };
        return Ok((StatusCode::OK, Json(info)).into_response());
    }
    {
        let mut pending = state.pending.lock().expect("job table");
        match pending.get(&id) {
            Some(Pending::Queued | Pending::Running) if mode == Mode::Async => {
                let info = JobInfo {
                    v: SCHEMA_VERSION,
                    id,
                    state: JobState::Running,
                    status: None,
                    error: None,
                };
                return Ok((StatusCode::ACCEPTED, Json(info)).into_response());
            }
            _ => {
                pending.insert(id.clone(), Pending::Queued);
            }
        }
    }
    match mode {
        Mode::Sync => {
            let info = run_job(state, id, req).await;
            let code = match &info.error {
                None => StatusCode::CREATED,
                Some(_) => StatusCode::UNPROCESSABLE_ENTITY,
            };
            Ok((code, Json(info)).into_response())
        }
        Mode::Async => {
            tokio::spawn(run_job(state, id.clone(), req));
            let info = JobInfo {
                v: SCHEMA_VERSION,
                id,
                state: JobState::Queued,
                status: None,
                error: None,
            };
            Ok((StatusCode::ACCEPTED, Json(info)).into_response())
        }
    }
}

async fn submit(
    State(state): State<Arc<AppState>>,
    Query(q): Query<SubmitQuery>,
    body: Bytes,
) -> Result<Response, HttpError> {
    let req: ApproximationRequest = parse(&body)?;
    start(state, req, q.mode).await
}

async fn job(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, HttpError> {
    if let Some(result) = state.store.get(&id)? {
        return Ok((StatusCode::OK, Json(result)).into_response());
    }
    let pending = state.pending.lock().expect("job table");
    let (code, st, error) = match pending.get(&id) {
        Some(Pending::Queued) => (StatusCode::ACCEPTED, JobState::Queued, None),
        Some(Pending::Running) => (StatusCode::ACCEPTED, JobState::Running, None),
        Some(Pending::Failed(e)) => (StatusCode::OK, JobState::Failed, Some(e.clone())),
        None => return Err(ApiError::NotFound(id).into()),
    };
    let info = JobInfo {
        v: SCHEMA_VERSION,
        id,
        state: st,
        status: None,
        error,
    };
    Ok((code, Json(info)).into_response())
}

async fn refine_job(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<SubmitQuery>,
    body: Bytes,
) -> Result<Response, HttpError> {
    let r: RefineRequest = parse(&body)?;
    if r.v != SCHEMA_VERSION {
        return Err(ApiError::Invalid(format!("schema version {} is not supported", r.v)).into());
    }
    let parent = state
        .store
        .get(&id)?
        .ok_or_else(|| ApiError::NotFound(id.clone()))?;
    let child = refine(&parent.request, r.region, r.degree, r.shape)?;
    start(state, child, q.mode).await
}

async fn surface(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<SurfaceQuery>,
) -> Result<Response, HttpError> {
    let result = state
        .store
        .get(&id)?
        .ok_or_else(|| ApiError::NotFound(id.clone()))?;
    let grid: GridSpec = q.grid.parse()?;
    let mesh = tokio::task::spawn_blocking(move || evaluate_surface(&result, &grid, q.oracle))
        .await
        .map_err(|e| ApiError::SolverFailure(e.to_string()))??;
    Ok((StatusCode::OK, Json(mesh)).into_response())
}
