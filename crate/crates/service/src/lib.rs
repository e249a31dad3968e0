//! HTTP API over persisted pipeline runs.
//!
//! Submissions return at once with a run id; a bounded pool executes runs in
//! the background. Every read endpoint serves the artifacts in the run
//! directory, so the API and the CLI always show the same data.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/api/queries` | [`QuerySubmission`] → [`Submitted`] |
//! | GET | `/api/runs/{id}` | `RunRecord` |
//! | GET | `/api/runs/{id}/table` | `RankedTable` |
//! | GET | `/api/runs/{id}/entities/{key}/evidence` | [`EntityEvidence`] |
//!
//! Errors are `{"error": {"code": ..., "message": ...}}` with one of the codes
//! in [`ErrorCode`].

use std::collections::{BTreeSet, HashSet};
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::Semaphore;
use tower_http::services::{ServeDir, ServeFile};

use contextmine_core::corpus::{Query, DEFAULT_SEED_K};
use contextmine_core::pipeline::{
    load_evidence, load_run, load_table, EvidenceSnippet, Pipeline, PipelineError, RunRecord,
    RunStatus,
};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server stopped: {0}")]
    Serve(std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidQuery,
    RunNotFound,
    RunNotComplete,
    EntityNotFound,
    NotFound,
    Internal,
}

impl ErrorCode {
    fn status(self) -> StatusCode {
        match self {
            ErrorCode::InvalidQuery => StatusCode::BAD_REQUEST,
            ErrorCode::RunNotFound | ErrorCode::EntityNotFound | ErrorCode::NotFound => {
                StatusCode::NOT_FOUND
            }
            ErrorCode::RunNotComplete => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

#[derive(Debug)]
pub struct ApiError(ErrorCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorEnvelope {
            error: ErrorBody {
                code: self.0,
                message: self.1,
            },
        };
        (self.0.status(), Json(body)).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::NotFound(_) => ErrorCode::RunNotFound,
            PipelineError::NotComplete(_) => ErrorCode::RunNotComplete,
            PipelineError::Config(_) => ErrorCode::InvalidQuery,
            _ => ErrorCode::Internal,
        };
        ApiError(code, e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuerySubmission {
    pub text: String,
    #[serde(default)]
    pub field_constraints: BTreeSet<String>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Submitted {
    pub run_id: String,
    pub status: RunStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityEvidence {
    pub run_id: String,
    pub canonical_key: String,
    pub evidence: Vec<EvidenceSnippet>,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub runs_root: PathBuf,
    pub workers: usize,
    /// Built UI assets; served at `/` when the directory holds `index.html`.
    pub ui_dir: Option<PathBuf>,
}

struct AppState {
    pipeline: Arc<Pipeline>,
    runs_root: PathBuf,
    pool: Arc<Semaphore>,
    in_flight: Mutex<HashSet<String>>,
}

impl AppState {
    fn run_dir(&self, id: &str) -> Result<PathBuf, ApiError> {
        // ids are content addresses; anything else cannot name a run
        let ok = id.len() == 20
            && id.starts_with("run-")
            && id[4..]
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if !ok {
            return Err(ApiError(
                ErrorCode::RunNotFound,
                format!("run not found: {id}"),
            ));
        }
        Ok(self.runs_root.join(id))
    }
}

pub fn router(pipeline: Arc<Pipeline>, config: &ServiceConfig) -> Router {
    let state = Arc::new(AppState {
        pipeline,
        runs_root: config.runs_root.clone(),
        pool: Arc::new(Semaphore::new(config.workers.max(1))),
        in_flight: Mutex::new(HashSet::new()),
    });
    let api = Router::new()
        .route(
            "/api/health",
            get(|| async { Json(serde_json::json!({"status": "ok"})) }),
        )
        .route("/api/queries", post(submit))
        .route("/api/runs/{id}", get(run_record))
        .route("/api/runs/{id}/table", get(run_table))
        .route(
            "/api/runs/{id}/entities/{key}/evidence",
            get(entity_evidence),
        )
        .route("/api/{*rest}", get(api_not_found).post(api_not_found))
        .with_state(state);
    match config
        .ui_dir
        .as_deref()
        .filter(|d| d.join("index.html").is_file())
    {
        Some(dir) => api
            .fallback_service(ServeDir::new(dir).fallback(ServeFile::new(dir.join("index.html")))),
        None => api.fallback(api_not_found),
    }
}

async fn api_not_found() -> ApiError {
    ApiError(ErrorCode::NotFound, "no such endpoint".into())
}

async fn submit(
    State(state): State<Arc<AppState>>,
    body: Result<Json<QuerySubmission>, axum::extract::rejection::JsonRejection>,
) -> Result<(StatusCode, Json<Submitted>), ApiError> {
    let Json(body) = body.map_err(|e| ApiError(ErrorCode::InvalidQuery, e.body_text()))?;
    let query = Query::new(body.text)
        .map_err(|e| ApiError(ErrorCode::InvalidQuery, e.to_string()))?
        .with_seed_k(body.k.unwrap_or(DEFAULT_SEED_K))
        .with_fields(body.field_constraints);
    query
        .validate()
        .map_err(|e| ApiError(ErrorCode::InvalidQuery, e.to_string()))?;

    let run_id = state.pipeline.run_id(&query);
    let record = {
        let mut in_flight = state.in_flight.lock().expect("in-flight set poisoned");
        if in_flight.contains(&run_id) {
            let record = load_run(&state.run_dir(&run_id)?)?;
            return Ok((
                StatusCode::ACCEPTED,
                Json(Submitted {
                    run_id,
                    status: record.status,
                }),
            ));
        }
        let record = state.pipeline.prepare(&query, &state.runs_root)?;
        if record.status == RunStatus::Complete {
            return Ok((
                StatusCode::OK,
                Json(Submitted {
                    run_id,
                    status: record.status,
                }),
            ));
        }
        in_flight.insert(run_id.clone());
        record
    };

    let worker = state.clone();
    tokio::spawn(async move {
        let permit = worker
            .pool
            .clone()
            .acquire_owned()
            .await
            .expect("pool never closes");
        let task_state = worker.clone();
        let id = record.run_id.clone();
        let result = tokio::task::spawn_blocking(move || {
            let _permit = permit;
            task_state.pipeline.execute(record, &task_state.runs_root)
        })
        .await;
        match result {
            Ok(Ok(r)) => tracing::info!(run = %id, status = ?r.status, "run finished"),
            Ok(Err(e)) => tracing::error!(run = %id, error = %e, "run aborted"),
            Err(e) => tracing::error!(run = %id, error = %e, "run worker panicked"),
        }
        worker
            .in_flight
            .lock()
            .expect("in-flight set poisoned")
            .remove(&id);
    });
    Ok((
        StatusCode::ACCEPTED,
        Json(Submitted {
            run_id,
            status: RunStatus::Pending,
        }),
    ))
}

async fn run_record(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<RunRecord>, ApiError> {
    Ok(Json(load_run(&state.run_dir(&id)?)?))
}

async fn run_table(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<contextmine_core::pipeline::RankedTable>, ApiError> {
    Ok(Json(load_table(&state.run_dir(&id)?)?))
}

async fn entity_evidence(
    State(state): State<Arc<AppState>>,
    Path((id, key)): Path<(String, String)>,
) -> Result<Json<EntityEvidence>, ApiError> {
    let mut all = load_evidence(&state.run_dir(&id)?)?;
    let evidence = all.remove(&key).ok_or_else(|| {
        ApiError(
            ErrorCode::EntityNotFound,
            format!("no entity {key:?} in {id}"),
        )
    })?;
    Ok(Json(EntityEvidence {
        run_id: id,
        canonical_key: key,
        evidence,
    }))
}

/// Binds the listening socket; a busy port is reported here, before any
/// request is served.
pub async fn bind(addr: SocketAddr) -> Result<TcpListener, ServiceError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })
}

pub async fn serve(listener: TcpListener, app: Router) -> Result<(), ServiceError> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}

/// True if `dir` looks like a built UI.
pub fn has_ui(dir: &FsPath) -> bool {
    dir.join("index.html").is_file()
}
