//! HTTP facade over the design engine: sessions holding a design document,
//! background optimization runs, suggestion browsing and design edits.

mod error;
mod session;

pub use error::{ApiError, ErrorBody};
pub use session::Session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use offcut_core::io::{load_design, optimize_document, save_design};
use offcut_core::optimizer::OptimizerConfig;
use offcut_core::protocol::{EditRequest, LockRequest, LockResponse, OptimizeAccepted, SelectRequest, SessionCreated, StatusDoc};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tokio::net::TcpListener;

use error::ApiResult;

type SessionRef = Arc<Mutex<Session>>;

/// In-memory session table.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, SessionRef>>>,
}

impl AppState {
    fn session(&self, id: &str) -> ApiResult<SessionRef> {
        self.sessions.lock().expect("session table").get(id).cloned().ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))
    }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::unprocessable(format!("invalid request body: {e}")))
}

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let doc = load_design(&body)?;
    let id = uuid::Uuid::new_v4().to_string();
    app.sessions.lock().expect("session table").insert(id.clone(), Arc::new(Mutex::new(Session::new(doc))));
    tracing::info!(session = %id, "session created");
    Ok((StatusCode::CREATED, Json(SessionCreated { id })))
}

async fn delete_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let removed = app.sessions.lock().expect("session table").remove(&id).ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))?;
    let _ = removed.lock().expect("session").cancel_run();
    Ok(StatusCode::NO_CONTENT)
}

async fn get_design(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let bytes = save_design(&s.lock().expect("session").doc);
    Ok(json_bytes(StatusCode::OK, bytes))
}

async fn start_optimize(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<(StatusCode, Json<OptimizeAccepted>)> {
    let config: OptimizerConfig = if body.iter().all(u8::is_ascii_whitespace) { OptimizerConfig::default() } else { parse(&body)? };
    let s = app.session(&id)?;
    let (run, doc, problem, control) = s.lock().expect("session").start_run(&config)?;
    tracing::info!(session = %id, run, "optimization started");
    tokio::task::spawn_blocking(move || {
        let outcome = optimize_document(&doc, &config, &control);
        if let Err(e) = &outcome {
            tracing::info!(run, error = %e, "optimization stopped");
        }
        s.lock().expect("session").finish_run(run, problem, outcome);
    });
    Ok((StatusCode::ACCEPTED, Json(OptimizeAccepted { run })))
}

async fn cancel_optimize(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    app.session(&id)?.lock().expect("session").cancel_run()?;
    Ok(StatusCode::ACCEPTED)
}

async fn status(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<StatusDoc>> {
    Ok(Json(app.session(&id)?.lock().expect("session").status()))
}

async fn run_result(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let bytes = serde_json::to_vec(s.lock().expect("session").run_doc()?).expect("run documents serialize");
    Ok(json_bytes(StatusCode::OK, bytes))
}

async fn suggestions(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let completed = app.session(&id)?.lock().expect("session").completed();
    let doc = match completed {
        Some(c) => c.suggestions(),
        None => offcut_core::protocol::SuggestionsDoc { run: 0, start_wastage: 1.0, suggestions: Vec::new() },
    };
    Ok(Json(doc).into_response())
}

async fn path_point(State(app): State<AppState>, Path((id, k, t)): Path<(String, usize, usize)>) -> ApiResult<Response> {
    let completed = app.session(&id)?.lock().expect("session").completed().ok_or_else(|| ApiError::not_found("no suggestions yet"))?;
    let point = tokio::task::spawn_blocking(move || completed.path_point(k, t)).await.expect("replay task")?;
    Ok(Json(point).into_response())
}

async fn select(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: SelectRequest = parse(&body)?;
    let s = app.session(&id)?;
    let mut s = s.lock().expect("session");
    s.select(req.k, req.t)?;
    Ok(json_bytes(StatusCode::OK, save_design(&s.doc)))
}

async fn lock(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<LockResponse>> {
    let req: LockRequest = parse(&body)?;
    let rows = app.session(&id)?.lock().expect("session").lock(&req)?;
    Ok(Json(LockResponse { rows }))
}

async fn edit(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: EditRequest = parse(&body)?;
    let s = app.session(&id)?;
    let response = tokio::task::spawn_blocking(move || s.lock().expect("session").edit(&req)).await.expect("edit task")?;
    Ok(Json(response).into_response())
}

async fn layout(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let doc = tokio::task::spawn_blocking(move || s.lock().expect("session").layout()).await.expect("layout task")?;
    Ok(Json(doc).into_response())
}

#[derive(Debug, Deserialize)]
struct PlanQuery {
    #[serde(default)]
    board: usize,
}

async fn plan_svg(State(app): State<AppState>, Path(id): Path<String>, Query(q): Query<PlanQuery>) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let svg = tokio::task::spawn_blocking(move || s.lock().expect("session").plan_svg(q.board)).await.expect("plan task")?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

async fn health() -> &'static str {
    "ok"
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/design", get(get_design))
        .route("/sessions/{id}/optimize", post(start_optimize).delete(cancel_optimize))
        .route("/sessions/{id}/status", get(status))
        .route("/sessions/{id}/run", get(run_result))
        .route("/sessions/{id}/suggestions", get(suggestions))
        .route("/sessions/{id}/suggestions/{k}/path/{t}", get(path_point))
        .route("/sessions/{id}/select", post(select))
        .route("/sessions/{id}/lock", post(lock))
        .route("/sessions/{id}/edit", post(edit))
        .route("/sessions/{id}/layout", get(layout))
        .route("/sessions/{id}/plan.svg", get(plan_svg))
        .with_state(state)
}

/// Serves the API on `listener` until the process receives Ctrl-C.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(AppState::default()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
