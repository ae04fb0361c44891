//! Local HTTP/JSON service holding board sessions. Each session keeps a
//! sequence and a valuation model and answers with heatmaps of all
//! continuation values.
//!
//! Endpoints:
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | create, body: config overrides |
//! | GET | `/sessions/{id}` | session summary |
//! | DELETE | `/sessions/{id}` | remove |
//! | PUT | `/sessions/{id}/sequence` | replace the sequence, returns heatmap |
//! | POST | `/sessions/{id}/accept` | append `{"field": "G7"}`, returns heatmap |
//! | GET | `/sessions/{id}/heatmap?top=K` | current heatmap |

pub mod error;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde_json::Value;
use tokio::sync::{Mutex, RwLock};

use seqval_core::{BoardError, FeatureBank, ModelConfig, PositionSequence, ValuationModel};

pub use error::ApiError;
pub use session::{heatmap, Session, SessionConfig, Snapshot};

pub const DEFAULT_PORT: u16 = 8642;
pub const DEFAULT_TOP: usize = 10;

type SessionHandle = Arc<Mutex<Session>>;

pub struct AppState {
    sessions: RwLock<HashMap<String, SessionHandle>>,
    banks: std::sync::Mutex<HashMap<String, Arc<FeatureBank>>>,
    state_dir: Option<PathBuf>,
}

impl AppState {
    pub fn in_memory() -> Arc<Self> {
        Arc::new(Self {
            sessions: RwLock::new(HashMap::new()),
            banks: std::sync::Mutex::new(HashMap::new()),
            state_dir: None,
        })
    }

    /// State persisted to `dir`, reloading any snapshots already there.
    pub fn with_state_dir(dir: &Path) -> std::io::Result<Arc<Self>> {
        std::fs::create_dir_all(dir)?;
        let state = Self {
            sessions: RwLock::new(HashMap::new()),
            banks: std::sync::Mutex::new(HashMap::new()),
            state_dir: Some(dir.to_path_buf()),
        };
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let restored = std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<Snapshot>(&t).map_err(|e| e.to_string()))
                .and_then(|snap| Session::restore(snap, |c| state.bank(c)).map_err(|e| e.detail));
            match restored {
                Ok(s) => {
                    sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
                }
                Err(e) => eprintln!("skipping snapshot {}: {e}", path.display()),
            }
        }
        state
            .sessions
            .try_write()
            .expect("not shared yet")
            .extend(sessions);
        Ok(Arc::new(state))
    }

    /// Banks are shared between sessions with equal model configs.
    pub fn bank(&self, cfg: &ModelConfig) -> Result<Arc<FeatureBank>, ApiError> {
        let key = serde_json::to_string(cfg).expect("config serializes");
        if let Some(b) = self.banks.lock().expect("bank cache").get(&key) {
            return Ok(Arc::clone(b));
        }
        let bank = cfg.build_bank()?;
        self.banks
            .lock()
            .expect("bank cache")
            .insert(key, Arc::clone(&bank));
        Ok(bank)
    }

    pub async fn session_count(&self) -> usize {
        self.sessions.read().await.len()
    }

    async fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn persist(&self, s: &Session) -> Result<(), ApiError> {
        if let Some(dir) = &self.state_dir {
            let text = serde_json::to_string_pretty(&s.snapshot()).expect("snapshot serializes");
            std::fs::write(dir.join(format!("{}.json", s.id)), text)
                .map_err(|e| ApiError::internal(format!("writing snapshot: {e}")))?;
        }
        Ok(())
    }

    fn forget(&self, id: &str) {
        if let Some(dir) = &self.state_dir {
            let _ = std::fs::remove_file(dir.join(format!("{id}.json")));
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/sequence", put(set_sequence))
        .route("/sessions/{id}/accept", post(accept))
        .route("/sessions/{id}/heatmap", get(get_heatmap))
        .with_state(state)
}

pub async fn serve(port: u16, state_dir: Option<&Path>) -> std::io::Result<()> {
    let state = match state_dir {
        Some(dir) => AppState::with_state_dir(dir)?,
        None => AppState::in_memory(),
    };
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

fn parse_json(body: &Bytes) -> Result<Value, ApiError> {
    if body.iter().all(|b| b.is_ascii_whitespace()) {
        return Ok(Value::Null);
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let config = SessionConfig::from_overrides(&parse_json(&body)?)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), config);
    state.persist(&session)?;
    let summary = session.summary();
    state
        .sessions
        .write()
        .await
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
) -> Result<Json<Value>, ApiError> {
    let handle = state.session(&id).await?;
    let s = handle.lock().await;
    Ok(Json(s.summary()))
}

async fn delete_session(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
) -> Result<StatusCode, ApiError> {
    let removed = state.sessions.write().await.remove(&id);
    match removed {
        Some(handle) => {
            // wait for in-flight requests on this session
            let _guard = handle.lock().await;
            state.forget(&id);
            Ok(StatusCode::NO_CONTENT)
        }
        None => Err(ApiError::not_found(&id)),
    }
}

/// Tokens from `["A1", ...]` or `{"positions": [...]}`.
fn position_tokens(body: &Value) -> Result<Vec<String>, ApiError> {
    let list = match body {
        Value::Array(a) => a,
        Value::Object(o) => match o.get("positions") {
            Some(Value::Array(a)) => a,
            _ => return Err(ApiError::bad_request("expected {\"positions\": [...]}")),
        },
        _ => return Err(ApiError::bad_request("expected a list of field notations")),
    };
    list.iter()
        .enumerate()
        .map(|(index, v)| {
            v.as_str().map(str::to_string).ok_or_else(|| {
                let mut e = ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "invalid_position",
                    format!("token {index}: expected a string"),
                );
                e.index = Some(index);
                e
            })
        })
        .collect()
}

/// Installs `sequence`, rebuilding the model unless it is frozen, and
/// returns the heatmap. Model work runs off the async threads.
async fn update(
    state: &Arc<AppState>,
    session: &mut Session,
    sequence: PositionSequence,
    top: usize,
) -> Result<Value, ApiError> {
    if sequence.len() < 2 {
        return Err(ApiError::too_short(sequence.len()));
    }
    let keep = if session.config.freeze_model {
        session.model.take()
    } else {
        None
    };
    let cfg = session.config.model.clone();
    let st = Arc::clone(state);
    let seq = sequence.clone();
    let (model, payload) = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let model = match keep {
            Some(m) => m,
            None => ValuationModel::with_bank(st.bank(&cfg)?, seq.clone())?,
        };
        let payload = heatmap(&seq, &model, top);
        Ok((model, payload))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    session.model = Some(model);
    let payload = payload?;
    session.sequence = sequence;
    session.updated_ms = session::now_ms();
    state.persist(session)?;
    Ok(payload)
}

fn top_param(q: &HashMap<String, String>) -> Result<usize, ApiError> {
    match q.get("top") {
        None => Ok(DEFAULT_TOP),
        Some(t) => t.parse().map_err(|_| {
            ApiError::bad_request(format!("top must be a non-negative integer, got `{t}`"))
        }),
    }
}

async fn set_sequence(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
    Query(q): Query<HashMap<String, String>>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let handle = state.session(&id).await?;
    let mut s = handle.lock().await;
    let tokens = position_tokens(&parse_json(&body)?)?;
    let sequence = PositionSequence::from_tokens(&tokens, s.board())?;
    Ok(Json(
        update(&state, &mut s, sequence, top_param(&q)?).await?,
    ))
}

async fn accept(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
    Query(q): Query<HashMap<String, String>>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let handle = state.session(&id).await?;
    let mut s = handle.lock().await;
    let body = parse_json(&body)?;
    let token = match &body {
        Value::String(t) => t.clone(),
        Value::Object(o) => o
            .get("field")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ApiError::bad_request("expected {\"field\": \"<notation>\"}"))?,
        _ => {
            return Err(ApiError::bad_request(
                "expected {\"field\": \"<notation>\"}",
            ))
        }
    };
    let index = s.sequence.len();
    let position =
        seqval_core::parse_position(&token, s.board()).map_err(|e| BoardError::AtIndex {
            index,
            source: Box::new(e),
        })?;
    let sequence = s.sequence.with(position)?;
    Ok(Json(
        update(&state, &mut s, sequence, top_param(&q)?).await?,
    ))
}

async fn get_heatmap(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Value>, ApiError> {
    let top = top_param(&q)?;
    let handle = state.session(&id).await?;
    let s = handle.lock().await;
    let model = s
        .model
        .as_ref()
        .ok_or_else(|| ApiError::too_short(s.sequence.len()))?;
    Ok(Json(heatmap(&s.sequence, model, top)?))
}
