use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use seqval_core::{BoardError, FeatureError, ValuationError};

/// JSON error body `{"error", "detail"}` plus optional `field` / `index`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub error: &'static str,
    pub detail: String,
    pub field: Option<String>,
    pub index: Option<usize>,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status,
            error,
            detail: detail.into(),
            field: None,
            index: None,
        }
    }

    pub fn invalid_field(field: &str, detail: impl Into<String>) -> Self {
        let mut e = Self::new(StatusCode::BAD_REQUEST, "invalid_config", detail);
        e.field = Some(field.to_string());
        e
    }

    pub fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", detail)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no session `{id}`"),
        )
    }

    pub fn too_short(len: usize) -> Self {
        Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "sequence too short",
            format!("need at least 2 positions, got {len}"),
        )
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail)
    }
}

impl From<FeatureError> for ApiError {
    fn from(e: FeatureError) -> Self {
        match e.field() {
            Some(field) => ApiError::invalid_field(field, e.to_string()),
            None => ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", e.to_string()),
        }
    }
}

impl From<BoardError> for ApiError {
    fn from(e: BoardError) -> Self {
        match e {
            BoardError::BoardTooSmall(_) => ApiError::invalid_field("board_size", e.to_string()),
            _ => {
                let mut err =
                    ApiError::new(StatusCode::BAD_REQUEST, "invalid_position", e.to_string());
                err.index = e.index();
                err
            }
        }
    }
}

impl From<ValuationError> for ApiError {
    fn from(e: ValuationError) -> Self {
        match e {
            ValuationError::TooShort(len) => ApiError::too_short(len),
            ValuationError::Board(b) => b.into(),
            ValuationError::Feature(f) => f.into(),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.error, "detail": self.detail });
        if let Some(f) = self.field {
            body["field"] = json!(f);
        }
        if let Some(i) = self.index {
            body["index"] = json!(i);
        }
        (self.status, Json(body)).into_response()
    }
}
