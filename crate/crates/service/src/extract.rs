use axum::extract::{FromRequest, FromRequestParts};
use axum::http::request::Parts;
use axum::http::header::IF_MATCH;

use crate::error::ApiError;

#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct Body<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Path), rejection(ApiError))]
pub struct PathParams<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct QueryParams<T>(pub T);

/// Client revision from `If-Match`, accepting `7`, `"7"` and `W/"7"`.
pub struct IfMatch(pub Option<u64>);

impl<S: Send + Sync> FromRequestParts<S> for IfMatch {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, ApiError> {
        let Some(raw) = parts.headers.get(IF_MATCH) else { return Ok(Self(None)) };
        let text = raw.to_str().unwrap_or_default().trim();
        let text = text.strip_prefix("W/").unwrap_or(text).trim_matches('"');
        text.parse().map(|r| Self(Some(r))).map_err(|_| {
            ApiError::new(axum::http::StatusCode::BAD_REQUEST, "InvalidRevision", format!("bad If-Match value {text:?}"))
        })
    }
}
