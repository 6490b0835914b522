//! HTTP/JSON service around the monitoring and synthesis operations.
//!
//! Every route takes and returns the request/response types of
//! `phoenix_core::api`. Heavy work runs on the blocking pool. Live streams
//! are kept in memory until deleted.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use phoenix_core::api::{self, ApiError, ErrorKind, LiveStream};
use serde::Serialize;
use uuid::Uuid;

/// Request bodies carry whole trace corpora.
pub const BODY_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Clone, Default)]
pub struct AppState {
    streams: Arc<Mutex<HashMap<Uuid, Arc<Mutex<LiveStream>>>>>,
}

impl AppState {
    pub fn stream_count(&self) -> usize {
        self.streams.lock().unwrap().len()
    }
}

pub struct HttpError(ApiError);

impl From<ApiError> for HttpError {
    fn from(e: ApiError) -> Self {
        HttpError(e)
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        let status = match self.0.kind {
            ErrorKind::Invalid => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Failed => StatusCode::UNPROCESSABLE_ENTITY,
        };
        (status, Json(self.0)).into_response()
    }
}

type Reply<T> = Result<Json<T>, HttpError>;

async fn blocking<T, F>(f: F) -> Reply<T>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Serialize + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json).map_err(HttpError),
        Err(e) => Err(HttpError(ApiError {
            kind: ErrorKind::Failed,
            message: format!("worker failed: {e}"),
        })),
    }
}

async fn health() -> Json<api::Health> {
    Json(api::health())
}

async fn monitor(Json(req): Json<api::MonitorRequest>) -> Reply<api::MonitorResponse> {
    blocking(move || api::monitor(&req)).await
}

async fn synth_pltl(Json(req): Json<api::SynthPltlRequest>) -> Reply<api::SynthPltlResponse> {
    blocking(move || api::synth_pltl(&req, None)).await
}

async fn synth_dfa(Json(req): Json<api::SynthAutomatonRequest>) -> Reply<api::SynthAutomatonResponse> {
    blocking(move || api::synth_dfa(&req)).await
}

async fn synth_mm(Json(req): Json<api::SynthAutomatonRequest>) -> Reply<api::SynthAutomatonResponse> {
    blocking(move || api::synth_mm(&req)).await
}

async fn generate(Json(req): Json<api::GenRequest>) -> Reply<api::GenResponse> {
    blocking(move || api::generate(&req)).await
}

async fn eval(Json(req): Json<api::EvalRequest>) -> Reply<phoenix_core::harness::MetricsReport> {
    blocking(move || api::eval(&req)).await
}

async fn bench(Json(req): Json<api::BenchRequest>) -> Reply<phoenix_core::harness::Throughput> {
    blocking(move || api::bench(&req)).await
}

async fn mem(Json(req): Json<api::DbSource>) -> Reply<phoenix_core::harness::MemReport> {
    blocking(move || api::mem(&req)).await
}

async fn create_stream(
    State(state): State<AppState>,
    Json(req): Json<api::StreamRequest>,
) -> Result<(StatusCode, Json<api::StreamCreated>), HttpError> {
    let stream = tokio::task::spawn_blocking(move || LiveStream::new(&req))
        .await
        .map_err(|e| HttpError(ApiError::invalid(e.to_string())))??;
    let id = Uuid::new_v4();
    let signatures = stream.signatures();
    state.streams.lock().unwrap().insert(id, Arc::new(Mutex::new(stream)));
    tracing::info!(%id, signatures, "stream opened");
    Ok((
        StatusCode::CREATED,
        Json(api::StreamCreated {
            id: id.to_string(),
            signatures,
        }),
    ))
}

fn find_stream(state: &AppState, id: &str) -> Result<(Uuid, Arc<Mutex<LiveStream>>), ApiError> {
    let uuid = Uuid::parse_str(id).map_err(|_| ApiError::not_found(format!("no stream `{id}`")))?;
    let streams = state.streams.lock().unwrap();
    let s = streams
        .get(&uuid)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no stream `{id}`")))?;
    Ok((uuid, s))
}

async fn feed_stream(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<api::StreamEvents>,
) -> Reply<api::StreamVerdicts> {
    let (_, stream) = find_stream(&state, &id)?;
    blocking(move || stream.lock().unwrap().feed(&req)).await
}

async fn delete_stream(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, HttpError> {
    let (uuid, _) = find_stream(&state, &id)?;
    state.streams.lock().unwrap().remove(&uuid);
    tracing::info!(%uuid, "stream closed");
    Ok(StatusCode::NO_CONTENT)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/monitor", post(monitor))
        .route("/v1/synth/pltl", post(synth_pltl))
        .route("/v1/synth/dfa", post(synth_dfa))
        .route("/v1/synth/mm", post(synth_mm))
        .route("/v1/gen", post(generate))
        .route("/v1/eval", post(eval))
        .route("/v1/bench", post(bench))
        .route("/v1/mem", post(mem))
        .route("/v1/streams", post(create_stream))
        .route("/v1/streams/{id}/events", post(feed_stream))
        .route("/v1/streams/{id}", axum::routing::delete(delete_stream))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(AppState::default()))
        .with_graceful_shutdown(shutdown)
        .await
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await
}
