use axum::extract::State;
use axum::response::Response;
use nalgebra::Vector3;
use serde::Deserialize;

use rgbd_annotate::bbox::{interpolate_track_with, Box3D, InterpolationMode, InterpolationOptions, Quat, TrackId};
use rgbd_annotate::Error;

use super::{created, envelope};
use crate::error::ApiResult;
use crate::extract::{Body, IfMatch, PathParams, QueryParams};
use crate::state::AppState;

fn identity() -> Quat {
    Quat::IDENTITY
}

#[derive(Debug, Deserialize)]
pub struct KeyframeInput {
    center: Vector3<f64>,
    size: Vector3<f64>,
    #[serde(default = "identity")]
    orientation: Quat,
    #[serde(default)]
    occlusion: f64,
}

impl KeyframeInput {
    fn into_box(self, track: TrackId, class_label: &str, frame: u32) -> Box3D {
        let mut b = Box3D::new(track, class_label, frame, self.center, self.size, self.orientation);
        b.occlusion = self.occlusion;
        b
    }
}

#[derive(Debug, Deserialize)]
pub struct NewKeyframe {
    frame_index: u32,
    #[serde(flatten)]
    values: KeyframeInput,
}

#[derive(Debug, Deserialize)]
pub struct NewTrack {
    class_label: String,
    #[serde(default)]
    keyframes: Vec<NewKeyframe>,
}

#[derive(Debug, Deserialize)]
pub struct TrackPatch {
    class_label: String,
}

#[derive(Debug, Default, Deserialize)]
pub struct KeyframePatch {
    center: Option<Vector3<f64>>,
    size: Option<Vector3<f64>>,
    orientation: Option<Quat>,
    occlusion: Option<f64>,
}

pub async fn list(State(app): State<AppState>) -> Response {
    let s = app.session();
    envelope(s.revision(), s.project.tracks.values().collect::<Vec<_>>())
}

pub async fn get_one(State(app): State<AppState>, PathParams(id): PathParams<u32>) -> ApiResult<Response> {
    let s = app.session();
    Ok(envelope(s.revision(), s.project.track(TrackId(id))?))
}

pub async fn create(State(app): State<AppState>, IfMatch(rev): IfMatch, Body(req): Body<NewTrack>) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    let id = s.project.next_track_id();
    let mut track = rgbd_annotate::bbox::BoxTrack::new(id, &req.class_label);
    for k in req.keyframes {
        let b = k.values.into_box(id, &req.class_label, k.frame_index);
        s.project.check_box(&b)?;
        track.insert_keyframe(b)?;
    }
    s.project.tracks.insert(id, track.clone());
    Ok(created(s.bump(), track))
}

pub async fn patch(
    State(app): State<AppState>,
    IfMatch(rev): IfMatch,
    PathParams(id): PathParams<u32>,
    Body(req): Body<TrackPatch>,
) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    let track = s.project.track_mut(TrackId(id))?;
    track.set_class_label(req.class_label);
    let track = track.clone();
    Ok(envelope(s.bump(), track))
}

pub async fn delete(State(app): State<AppState>, IfMatch(rev): IfMatch, PathParams(id): PathParams<u32>) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    s.project.track(TrackId(id))?;
    let track = s.project.tracks.remove(&TrackId(id));
    Ok(envelope(s.bump(), track))
}

fn missing_keyframe(id: u32, frame: u32) -> Error {
    Error::NotFound { kind: "keyframe", id: format!("{id}/{frame}") }
}

pub async fn get_keyframe(State(app): State<AppState>, PathParams((id, frame)): PathParams<(u32, u32)>) -> ApiResult<Response> {
    let s = app.session();
    let b = s.project.track(TrackId(id))?.keyframe(frame).ok_or_else(|| missing_keyframe(id, frame))?;
    Ok(envelope(s.revision(), b))
}

pub async fn insert_keyframe(
    State(app): State<AppState>,
    IfMatch(rev): IfMatch,
    PathParams((id, frame)): PathParams<(u32, u32)>,
    Body(input): Body<KeyframeInput>,
) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    let label = s.project.track(TrackId(id))?.class_label.clone();
    let b = input.into_box(TrackId(id), &label, frame);
    s.project.check_box(&b)?;
    s.project.track_mut(TrackId(id))?.insert_keyframe(b.clone())?;
    Ok(created(s.bump(), b))
}

pub async fn patch_keyframe(
    State(app): State<AppState>,
    IfMatch(rev): IfMatch,
    PathParams((id, frame)): PathParams<(u32, u32)>,
    Body(p): Body<KeyframePatch>,
) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    let mut b = s.project.track(TrackId(id))?.keyframe(frame).ok_or_else(|| missing_keyframe(id, frame))?.clone();
    b.center = p.center.unwrap_or(b.center);
    b.size = p.size.unwrap_or(b.size);
    b.orientation = p.orientation.unwrap_or(b.orientation);
    b.occlusion = p.occlusion.unwrap_or(b.occlusion);
    s.project.track_mut(TrackId(id))?.upsert_keyframe(b.clone())?;
    Ok(envelope(s.bump(), b))
}

pub async fn delete_keyframe(
    State(app): State<AppState>,
    IfMatch(rev): IfMatch,
    PathParams((id, frame)): PathParams<(u32, u32)>,
) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    let b = s.project.track_mut(TrackId(id))?.remove_keyframe(frame).ok_or_else(|| missing_keyframe(id, frame))?;
    Ok(envelope(s.bump(), b))
}

#[derive(Debug, Deserialize)]
pub struct InterpolateQuery {
    epsilon: Option<f64>,
    #[serde(default)]
    mode: InterpolationMode,
}

/// Dense boxes over the track's keyframe span plus the per-gap center modes.
pub async fn interpolate(
    State(app): State<AppState>,
    PathParams(id): PathParams<u32>,
    QueryParams(q): QueryParams<InterpolateQuery>,
) -> ApiResult<Response> {
    let s = app.session();
    let track = s.project.track(TrackId(id))?;
    let options = InterpolationOptions::with_center_mode(q.epsilon.unwrap_or(s.project.config.epsilon), q.mode);
    Ok(envelope(s.revision(), interpolate_track_with(track, &options)?))
}
