//! HTTP conversation API.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use factful_core::engine::{
    DisplayPayload, Engine, EngineError, FactEvent, Session, SessionOutcome, SessionPhase, Turn,
};
use factful_core::policy::PolicyTrace;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::persist::SessionStore;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_body_bytes: usize,
    pub max_utterance_chars: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_body_bytes: 16 * 1024,
            max_utterance_chars: 500,
        }
    }
}

type SessionMap = HashMap<String, Arc<Mutex<Session>>>;

/// Shared server state. Requests that need the engine get 503 until
/// [`AppState::set_ready`] has been called.
pub struct AppState {
    engine: OnceLock<Arc<Engine>>,
    sessions: RwLock<SessionMap>,
    store: Option<SessionStore>,
    limits: Limits,
}

impl AppState {
    pub fn new(store: Option<SessionStore>, limits: Limits) -> Self {
        Self {
            engine: OnceLock::new(),
            sessions: RwLock::new(HashMap::new()),
            store,
            limits,
        }
    }

    /// Installs the engine along with any recovered sessions. Only the first
    /// call has an effect.
    pub fn set_ready(&self, engine: Arc<Engine>, recovered: Vec<Session>) -> bool {
        if self.engine.get().is_some() {
            return false;
        }
        {
            let mut map = self.sessions.write().expect("session map poisoned");
            for s in recovered {
                map.insert(s.id.clone(), Arc::new(Mutex::new(s)));
            }
        }
        self.engine.set(engine).is_ok()
    }

    pub fn is_ready(&self) -> bool {
        self.engine.get().is_some()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    fn engine(&self) -> Result<Arc<Engine>, ApiError> {
        self.engine.get().cloned().ok_or(ApiError::NotReady)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or(ApiError::UnknownSession)
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotReady,
    UnknownSession,
    Ended,
    TurnInProgress,
    BadRequest(String),
    Internal(String),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::NotReady => (StatusCode::SERVICE_UNAVAILABLE, "not_ready", "fact store not loaded".into()),
            ApiError::UnknownSession => (StatusCode::NOT_FOUND, "unknown_session", "no such session".into()),
            ApiError::Ended => (StatusCode::CONFLICT, "session_ended", "session has ended".into()),
            ApiError::TurnInProgress => (StatusCode::CONFLICT, "turn_in_progress", "turn in progress".into()),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m),
        };
        let body = ErrorBody {
            code: code.into(),
            message,
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnRequest {
    pub utterance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResponse {
    pub turn_index: usize,
    pub assistant_text: String,
    pub display: DisplayPayload,
    pub phase: SessionPhase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_event: Option<FactEvent>,
    pub policy_trace: Vec<PolicyTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub phase: SessionPhase,
    pub turns: Vec<Turn>,
    pub policy_traces: Vec<PolicyTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<SessionOutcome>,
}

pub fn router(state: Arc<AppState>) -> Router {
    let body_limit = state.limits.max_body_bytes;
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/turns", post(post_turn))
        .layer(DefaultBodyLimit::max(body_limit))
        .layer(middleware::from_fn(access_log))
        .with_state(state)
}

async fn access_log(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_owned();
    let start = Instant::now();
    let res = next.run(req).await;
    tracing::info!(
        target: "access",
        method = %method,
        path = %path,
        status = res.status().as_u16(),
        latency_ms = start.elapsed().as_secs_f64() * 1000.0,
    );
    res
}

async fn healthz(State(state): State<Arc<AppState>>) -> Response {
    if state.is_ready() {
        (StatusCode::OK, Json(serde_json::json!({"status": "ok"}))).into_response()
    } else {
        ApiError::NotReady.into_response()
    }
}

async fn create_session(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let engine = state.engine()?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    if let Some(store) = state.store.clone() {
        let id = id.clone();
        tokio::task::spawn_blocking(move || store.create(&id))
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))?
            .map_err(|e| ApiError::Internal(e.to_string()))?;
    }
    let session = engine.new_session(id.clone());
    state
        .sessions
        .write()
        .expect("session map poisoned")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(CreatedSession { session_id: id })).into_response())
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let engine = state.engine()?;
    let session = state.session(&id)?;
    let s = session.lock().await;
    Ok(Json(SessionView {
        session_id: s.id.clone(),
        phase: s.phase,
        turns: s.turn_log.clone(),
        policy_traces: s.traces.clone(),
        outcome: s.is_ended().then(|| engine.complete_session(&s)),
    }))
}

async fn post_turn(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<TurnRequest>, JsonRejection>,
) -> Result<Json<TurnResponse>, ApiError> {
    let engine = state.engine()?;
    let session = state.session(&id)?;
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    if req.utterance.trim().is_empty() {
        return Err(ApiError::BadRequest("utterance is empty".into()));
    }
    if req.utterance.chars().count() > state.limits.max_utterance_chars {
        return Err(ApiError::BadRequest(format!(
            "utterance longer than {} characters",
            state.limits.max_utterance_chars
        )));
    }
    let mut guard = session.try_lock_owned().map_err(|_| ApiError::TurnInProgress)?;
    if guard.is_ended() {
        return Err(ApiError::Ended);
    }
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || {
        let before = guard.clone();
        let turn = engine.handle_turn(&mut guard, &req.utterance).map_err(|e| match e {
            EngineError::SessionEnded => ApiError::Ended,
            EngineError::EmptyUtterance => ApiError::BadRequest("utterance is empty".into()),
            other => ApiError::Internal(other.to_string()),
        })?;
        if let Some(store) = store {
            let n = guard.turn_log.len();
            if let Err(e) = store.append(&guard.id, &guard.turn_log[n - 2..]) {
                // Memory must not run ahead of the log.
                *guard = before;
                return Err(ApiError::Internal(e.to_string()));
            }
        }
        Ok(Json(TurnResponse {
            turn_index: turn.index,
            policy_trace: guard.traces_for_turn(turn.index).cloned().collect(),
            assistant_text: turn.text,
            display: turn.display_payload.unwrap_or_default(),
            phase: guard.phase,
            fact_event: turn.fact_event,
        }))
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?
}
