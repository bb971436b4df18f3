//! HTTP/JSON front end for [`codenames_core::session`].
//!
//! | method | path                         | body                          |
//! |--------|------------------------------|-------------------------------|
//! | POST   | `/sessions`                  | `SessionConfig`               |
//! | GET    | `/sessions/{id}/view`        |                               |
//! | POST   | `/sessions/{id}/clue`        | `{"word": …, "number": …}`    |
//! | POST   | `/sessions/{id}/guess`       | `{"words": […]}`              |
//! | POST   | `/sessions/{id}/agent-step`  |                               |
//! | GET    | `/sessions/{id}/beliefs`     |                               |
//! | GET    | `/sessions/{id}/transcript`  | (finished or human spymaster) |
//!
//! Sessions live in memory. Actions on one session are serialized by a
//! per-session lock and run on the blocking pool, so a slow agent never
//! stalls other sessions.

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use codenames_core::agents::{ModelRegistry, Role};
use codenames_core::game::Clue;
use codenames_core::session::{
    ActionResponse, ApiError, BeliefsResponse, Session, SessionConfig, SessionError, SessionView, Status,
};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use uuid::Uuid;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: Uuid,
    pub view: SessionView,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuessBody {
    pub words: Vec<String>,
}

struct Slot {
    session: Arc<Mutex<Session>>,
    touched: parking_lot::Mutex<Instant>,
}

/// Shared between all handlers.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    registry: Arc<ModelRegistry>,
    pool: Arc<Vec<String>>,
    idle_timeout: Duration,
    sessions: RwLock<HashMap<Uuid, Arc<Slot>>>,
}

impl AppState {
    /// Boards are dealt from `pool`; sessions idle for `idle_timeout` are
    /// dropped by [`AppState::sweep`].
    pub fn new(registry: Arc<ModelRegistry>, pool: Vec<String>, idle_timeout: Duration) -> Self {
        Self {
            inner: Arc::new(Inner {
                registry,
                pool: Arc::new(pool),
                idle_timeout,
                sessions: RwLock::default(),
            }),
        }
    }

    pub fn sessions(&self) -> usize {
        self.inner.sessions.read().len()
    }

    /// Drops idle sessions and returns how many went.
    pub fn sweep(&self) -> usize {
        let timeout = self.inner.idle_timeout;
        let mut sessions = self.inner.sessions.write();
        let before = sessions.len();
        sessions.retain(|_, slot| slot.touched.lock().elapsed() < timeout);
        before - sessions.len()
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, Failure> {
        let unknown = || Failure::not_found(format!("no session `{id}`"));
        let id: Uuid = id.parse().map_err(|_| unknown())?;
        let slot = self.inner.sessions.read().get(&id).cloned().ok_or_else(unknown)?;
        *slot.touched.lock() = Instant::now();
        Ok(slot)
    }

    /// Runs `f` on the session under its lock, off the async workers.
    async fn with_session<T, F>(&self, id: &str, f: F) -> Result<T, Failure>
    where
        T: Send + 'static,
        F: FnOnce(&mut Session) -> Result<T, Failure> + Send + 'static,
    {
        let slot = self.slot(id)?;
        let mut guard = slot.session.clone().lock_owned().await;
        tokio::task::spawn_blocking(move || f(&mut guard))
            .await
            .map_err(|e| Failure::internal(format!("session task failed: {e}")))?
    }
}

/// An error response: status plus `{code, message, rule}`.
#[derive(Debug)]
pub struct Failure {
    status: StatusCode,
    body: ApiError,
}

impl Failure {
    fn new(status: StatusCode, code: &str, message: String) -> Self {
        Self {
            status,
            body: ApiError {
                code: code.to_owned(),
                message,
                rule: None,
            },
        }
    }

    fn not_found(message: String) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn internal(message: String) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::Conflict(_) => StatusCode::CONFLICT,
            SessionError::Rule(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Agent(_) => StatusCode::INTERNAL_SERVER_ERROR,
            SessionError::BadRequest(_) => StatusCode::BAD_REQUEST,
        };
        Self { status, body: e.to_api() }
    }
}

impl From<JsonRejection> for Failure {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Reply<T> = Result<Json<T>, Failure>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create))
        .route("/sessions/{id}/view", get(view))
        .route("/sessions/{id}/clue", post(clue))
        .route("/sessions/{id}/guess", post(guess))
        .route("/sessions/{id}/agent-step", post(agent_step))
        .route("/sessions/{id}/beliefs", get(beliefs))
        .route("/sessions/{id}/transcript", get(transcript))
        .with_state(state)
}

async fn create(
    State(state): State<AppState>,
    body: Result<Json<SessionConfig>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), Failure> {
    let Json(config) = body?;
    let (registry, pool) = (state.inner.registry.clone(), state.inner.pool.clone());
    // building an agent may index vectors; keep it off the async workers
    let session = tokio::task::spawn_blocking(move || Session::new(&registry, &pool, config))
        .await
        .map_err(|e| Failure::internal(e.to_string()))??;
    let id = Uuid::new_v4();
    let view = session.view();
    tracing::info!(%id, seed = session.seed(), role = %session.role(), "session created");
    let slot = Slot {
        session: Arc::new(Mutex::new(session)),
        touched: parking_lot::Mutex::new(Instant::now()),
    };
    state.inner.sessions.write().insert(id, Arc::new(slot));
    Ok((StatusCode::CREATED, Json(Created { id, view })))
}

async fn view(State(state): State<AppState>, Path(id): Path<String>) -> Reply<SessionView> {
    state.with_session(&id, |s| Ok(s.view())).await.map(Json)
}

async fn clue(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Clue>, JsonRejection>,
) -> Reply<ActionResponse> {
    let Json(clue) = body?;
    state.with_session(&id, move |s| Ok(s.submit_clue(clue)?)).await.map(Json)
}

async fn guess(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<GuessBody>, JsonRejection>,
) -> Reply<ActionResponse> {
    let Json(body) = body?;
    state.with_session(&id, move |s| Ok(s.submit_guess(&body.words)?)).await.map(Json)
}

async fn agent_step(State(state): State<AppState>, Path(id): Path<String>) -> Reply<ActionResponse> {
    state.with_session(&id, |s| Ok(s.agent_step()?)).await.map(Json)
}

async fn beliefs(State(state): State<AppState>, Path(id): Path<String>) -> Reply<BeliefsResponse> {
    state.with_session(&id, |s| Ok(s.beliefs())).await.map(Json)
}

async fn transcript(State(state): State<AppState>, Path(id): Path<String>) -> Result<String, Failure> {
    state
        .with_session(&id, |s| {
            // the transcript holds the hidden assignment
            if s.role() == Role::Guesser && s.status() != Status::Finished {
                return Err(Failure::from(SessionError::Conflict(
                    "the transcript is available to a guesser once the game is over".into(),
                )));
            }
            Ok(s.transcript().to_string())
        })
        .await
}

/// Serves until `shutdown` resolves, sweeping idle sessions periodically.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let period = (state.inner.idle_timeout / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    let sweeper = {
        let state = state.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let dropped = state.sweep();
                if dropped > 0 {
                    tracing::info!(dropped, "expired idle sessions");
                }
            }
        })
    };
    let addr: Option<SocketAddr> = listener.local_addr().ok();
    tracing::info!(?addr, "play service listening");
    let result = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await;
    sweeper.abort();
    result
}
