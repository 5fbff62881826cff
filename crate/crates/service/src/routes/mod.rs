use axum::http::header::{CONTENT_TYPE, ETAG};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;

use crate::state::AppState;

mod frames;
mod project;
mod segment;
mod tracks;

/// `{"revision": r, "data": ...}` with an `ETag` carrying the same revision.
pub(crate) fn envelope<T: Serialize>(revision: u64, data: T) -> Response {
    let mut resp = Json(json!({ "revision": revision, "data": data })).into_response();
    if let Ok(tag) = HeaderValue::from_str(&format!("\"{revision}\"")) {
        resp.headers_mut().insert(ETAG, tag);
    }
    resp
}

pub(crate) fn created<T: Serialize>(revision: u64, data: T) -> Response {
    let mut resp = envelope(revision, data);
    *resp.status_mut() = StatusCode::CREATED;
    resp
}

pub(crate) fn png(bytes: Vec<u8>) -> Response {
    ([(CONTENT_TYPE, "image/png")], bytes).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/project", get(project::summary))
        .route("/project/save", post(project::save))
        .route("/calibration/world-origin", post(project::world_origin))
        .route("/evaluate", post(project::evaluate))
        .route("/frames/{frame}/rgb", get(frames::rgb))
        .route("/frames/{frame}/depth", get(frames::depth))
        .route("/frames/{frame}/cloud", get(frames::cloud))
        .route("/tracks", get(tracks::list).post(tracks::create))
        .route("/tracks/{id}", get(tracks::get_one).patch(tracks::patch).delete(tracks::delete))
        .route(
            "/tracks/{id}/keyframes/{frame}",
            get(tracks::get_keyframe)
                .post(tracks::insert_keyframe)
                .patch(tracks::patch_keyframe)
                .delete(tracks::delete_keyframe),
        )
        .route("/tracks/{id}/interpolate", post(tracks::interpolate))
        .route("/segment/session", get(segment::session))
        .route("/segment/init", post(segment::init))
        .route("/segment/iterate", post(segment::iterate))
        .route("/segment/select3d", post(segment::select3d))
        .route("/segment/seed-from-depth", post(segment::seed_from_depth))
        .fallback(|| async {
            crate::error::ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
        })
        .with_state(state)
}
