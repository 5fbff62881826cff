use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use rgbd_annotate::Error;

/// Error body `{"error": kind, "message": text}` with a matching status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        Self { status, kind: kind.to_owned(), message: message.into() }
    }

    pub fn revision_required() -> Self {
        Self::new(StatusCode::PRECONDITION_REQUIRED, "RevisionRequired", "mutations need an If-Match revision")
    }

    pub fn revision_conflict(sent: u64, current: u64) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "RevisionConflict",
            format!("revision {sent} is stale, current is {current}"),
        )
    }

    pub fn busy() -> Self {
        Self::new(StatusCode::CONFLICT, "JobInFlight", "a segmentation job for this key is still running")
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotFound { .. } => StatusCode::NOT_FOUND,
            Error::WriterLockHeld(_) => StatusCode::CONFLICT,
            _ if e.is_io() => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.kind(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(r.status(), "InvalidBody", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidQuery", r.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(r: PathRejection) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
