use axum::extract::State;
use axum::response::Response;
use serde::{Deserialize, Serialize};

use rgbd_annotate::geometry::{CameraRig, ExtrinsicTransform};
use rgbd_annotate::metrics::{evaluate_dataset, AnnotationSet, DatasetEval};
use rgbd_annotate::project::ProjectConfig;

use super::envelope;
use crate::error::ApiResult;
use crate::extract::{Body, IfMatch};
use crate::state::AppState;

#[derive(Serialize)]
struct Summary<'a> {
    frames: usize,
    undistorted: bool,
    rig: &'a CameraRig,
    config: &'a ProjectConfig,
    tracks: Vec<u32>,
    masks: usize,
}

pub async fn summary(State(app): State<AppState>) -> Response {
    let s = app.session();
    let p = &s.project;
    envelope(
        s.revision(),
        Summary {
            frames: p.frames.len(),
            undistorted: p.undistorted,
            rig: &p.rig,
            config: &p.config,
            tracks: p.tracks.keys().map(|t| t.0).collect(),
            masks: p.masks.len(),
        },
    )
}

pub async fn save(State(app): State<AppState>) -> ApiResult<Response> {
    let s = app.session();
    s.save()?;
    Ok(envelope(s.revision(), serde_json::json!({ "saved": true })))
}

pub async fn world_origin(
    State(app): State<AppState>,
    IfMatch(rev): IfMatch,
    Body(xf): Body<ExtrinsicTransform>,
) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    s.project.set_world_origin(xf)?;
    let r = s.bump();
    Ok(envelope(r, s.project.rig))
}

#[derive(Deserialize)]
pub struct EvaluateRequest {
    truth: AnnotationSet,
}

#[derive(Serialize)]
struct EvaluateResponse {
    report: DatasetEval,
    text: String,
}

/// Scores the project's annotations against a posted ground truth.
pub async fn evaluate(State(app): State<AppState>, Body(req): Body<EvaluateRequest>) -> ApiResult<Response> {
    let (revision, user) = {
        let s = app.session();
        (s.revision(), s.project.annotation_set()?)
    };
    let report = evaluate_dataset(&user, &req.truth)?;
    let text = report.to_text();
    Ok(envelope(revision, EvaluateResponse { report, text }))
}
