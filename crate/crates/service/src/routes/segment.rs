use std::collections::BTreeSet;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::Response;
use serde::{Deserialize, Serialize};

use rgbd_annotate::bbox::{InterpolationOptions, TrackId};
use rgbd_annotate::geometry::CameraKind;
use rgbd_annotate::segmentation::{
    apply_scribbles, crop_image, default_padding, grabcut_downsampled, infer_rect, init_trimap, mask_from_selection,
    overlap_background, seed_rgb_from_depth, select_points, BinaryMask, InstanceMask, Modality, PixelRect, ScribbleSet,
    SeedHardness, SelectionRect3D, TrimapLabel,
};
use rgbd_annotate::Error;

use super::envelope;
use crate::error::{ApiError, ApiResult};
use crate::extract::{Body, IfMatch, QueryParams};
use crate::state::{AppState, GrabCutSession, Session, SessionKey};

fn kind_of(m: Modality) -> CameraKind {
    match m {
        Modality::Rgb => CameraKind::Rgb,
        Modality::Depth => CameraKind::Depth,
    }
}

fn no_session(key: &SessionKey) -> Error {
    Error::NotFound { kind: "segment session", id: format!("{}/{}/{}", key.0, key.1, key.2.as_str()) }
}

#[derive(Debug, Deserialize)]
pub struct InitRequest {
    frame: u32,
    instance: u32,
    modality: Modality,
    /// Frame-pixel rectangle; inferred from the instance's box when absent.
    rect: Option<PixelRect>,
    padding: Option<u32>,
}

#[derive(Serialize)]
struct TrimapSummary {
    crop: PixelRect,
    rect: PixelRect,
    padding: u32,
    hard_foreground: usize,
    hard_background: usize,
}

fn summarize(t: &rgbd_annotate::segmentation::Trimap) -> TrimapSummary {
    TrimapSummary {
        crop: t.crop,
        rect: t.rect,
        padding: t.padding,
        hard_foreground: t.count(TrimapLabel::HardForeground),
        hard_background: t.count(TrimapLabel::HardBackground),
    }
}

fn box_rect(s: &Session, frame: u32, instance: u32, modality: Modality) -> rgbd_annotate::Result<PixelRect> {
    let track = s.project.track(TrackId(instance))?;
    let b = match track.keyframe(frame) {
        Some(b) => b.clone(),
        None => rgbd_annotate::bbox::interpolate_track_with(track, &InterpolationOptions::hybrid(s.project.config.epsilon))?
            .boxes
            .into_iter()
            .find(|b| b.frame_index == frame)
            .ok_or_else(|| Error::NotFound { kind: "box", id: format!("{instance}/{frame}") })?,
    };
    infer_rect(&b, &s.project.rig, kind_of(modality))
}

/// Starts (or restarts) the GrabCut session for one (frame, instance, modality).
pub async fn init(State(app): State<AppState>, IfMatch(rev): IfMatch, Body(req): Body<InitRequest>) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    let key = (req.frame, req.instance, req.modality);
    if s.is_busy(&key) {
        return Err(ApiError::busy());
    }
    s.project.frame(req.frame as usize)?;
    let rect = match req.rect {
        Some(r) => r,
        None => box_rect(&s, req.frame, req.instance, req.modality)?,
    };
    let intr = s.project.rig.intrinsics(kind_of(req.modality));
    let (w, h) = (intr.width as usize, intr.height as usize);
    let trimap = init_trimap(rect, w, h, req.padding.unwrap_or_else(|| default_padding(&rect)), req.modality)?;
    let others: Vec<InstanceMask> =
        s.project.masks.frame(req.frame, req.modality).filter(|m| m.instance_id != req.instance).cloned().collect();
    let trimap = overlap_background(&trimap, &others)?;
    let summary = summarize(&trimap);
    s.grabcut.insert(key, GrabCutSession { trimap, gmms: None, energy: Vec::new() });
    Ok(envelope(s.bump(), summary))
}

#[derive(Debug, Deserialize)]
pub struct SessionQuery {
    frame: u32,
    instance: u32,
    modality: Modality,
}

#[derive(Serialize)]
struct SessionBody<'a> {
    crop: PixelRect,
    rect: PixelRect,
    /// Row-major over the crop.
    labels: &'a [TrimapLabel],
    energy: &'a [f64],
}

/// Current trimap and energy trace of one session.
pub async fn session(State(app): State<AppState>, QueryParams(q): QueryParams<SessionQuery>) -> ApiResult<Response> {
    let s = app.session();
    let key = (q.frame, q.instance, q.modality);
    let g = s.grabcut.get(&key).ok_or_else(|| no_session(&key))?;
    let body = SessionBody { crop: g.trimap.crop, rect: g.trimap.rect, labels: g.trimap.labels(), energy: &g.energy };
    Ok(envelope(s.revision(), body))
}

struct Claim {
    app: AppState,
    key: SessionKey,
}

impl Drop for Claim {
    fn drop(&mut self) {
        self.app.session().release(&self.key);
    }
}

#[derive(Debug, Deserialize)]
pub struct IterateRequest {
    frame: u32,
    instance: u32,
    modality: Modality,
    #[serde(default)]
    scribbles: ScribbleSet,
    iterations: Option<usize>,
}

#[derive(Serialize)]
struct IterateResponse {
    crop: PixelRect,
    /// Foreground at crop resolution.
    mask: BinaryMask,
    energy: Vec<f64>,
    foreground_pixels: usize,
}

/// Applies scribbles and runs GrabCut on a worker thread; the result becomes the
/// instance's mask. Only one job per key runs at a time.
pub async fn iterate(State(app): State<AppState>, IfMatch(rev): IfMatch, Body(req): Body<IterateRequest>) -> ApiResult<Response> {
    let key = (req.frame, req.instance, req.modality);
    let (image, trimap, gmms, params, iterations, frame_dims) = {
        let mut s = app.session();
        s.check(rev)?;
        let session = s.grabcut.get(&key).ok_or_else(|| no_session(&key))?;
        let trimap = apply_scribbles(&session.trimap, &req.scribbles);
        let gmms = session.gmms.clone();
        let image = s.segmentation_image(req.frame as usize, req.modality)?;
        let params = s.project.config.grabcut;
        let iterations = req.iterations.unwrap_or(params.iterations);
        s.claim(key)?;
        let dims = (image.width() as usize, image.height() as usize);
        (image, trimap, gmms, params, iterations, dims)
    };

    // Released on drop so a cancelled request cannot leave the key claimed.
    let claim = Claim { app: app.clone(), key };
    let job_trimap = trimap.clone();
    let job = tokio::task::spawn_blocking(move || {
        let crop = crop_image(&image, &job_trimap.crop);
        grabcut_downsampled(&crop, &job_trimap, gmms.as_ref(), iterations, &params, params.downsample)
    })
    .await;

    drop(claim);
    let mut s = app.session();
    let result = job
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "WorkerFailed", e.to_string()))?
        .map_err(ApiError::from)?;
    let full = trimap.to_frame_mask(&result.mask, frame_dims.0, frame_dims.1);
    let mut trimap = trimap;
    trimap.resume_from(&result.mask)?;
    s.project.masks.upsert(InstanceMask { instance_id: req.instance, frame_index: req.frame, modality: req.modality, mask: full });
    let body = IterateResponse {
        crop: trimap.crop,
        foreground_pixels: result.mask.count(),
        mask: result.mask,
        energy: result.energy.clone(),
    };
    s.grabcut.insert(key, GrabCutSession { trimap, gmms: result.gmms, energy: result.energy });
    Ok(envelope(s.bump(), body))
}

#[derive(Debug, Deserialize)]
pub struct Select3dRequest {
    frame: u32,
    instance: u32,
    selection: SelectionRect3D,
    #[serde(default)]
    current: BTreeSet<usize>,
    cap: Option<usize>,
}

#[derive(Serialize)]
struct Select3dResponse {
    selected: BTreeSet<usize>,
    mask_pixels: usize,
}

/// Rectangle selection over the frame's world-space cloud; the selected points'
/// source pixels become the instance's depth mask.
pub async fn select3d(State(app): State<AppState>, IfMatch(rev): IfMatch, Body(req): Body<Select3dRequest>) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    let cap = req.cap.unwrap_or(s.project.config.cloud_cap);
    let cloud = s.cloud(req.frame as usize, cap)?;
    let selected = select_points(&cloud, &req.selection, &req.current)?;
    let intr = s.project.rig.depth.intrinsics;
    let mask = mask_from_selection(&selected, &cloud, intr.width as usize, intr.height as usize, req.instance, req.frame)?;
    let mask_pixels = mask.mask.count();
    if mask_pixels == 0 {
        s.project.masks.remove(req.frame, Modality::Depth, req.instance);
    } else {
        s.project.masks.upsert(mask);
    }
    Ok(envelope(s.bump(), Select3dResponse { selected, mask_pixels }))
}

#[derive(Debug, Deserialize)]
pub struct SeedRequest {
    frame: u32,
    instance: u32,
    #[serde(default)]
    hardness: SeedHardness,
}

/// Transfers the instance's depth mask into its RGB session as foreground seeds.
pub async fn seed_from_depth(State(app): State<AppState>, IfMatch(rev): IfMatch, Body(req): Body<SeedRequest>) -> ApiResult<Response> {
    let mut s = app.session();
    s.check(rev)?;
    let key = (req.frame, req.instance, Modality::Rgb);
    if s.is_busy(&key) {
        return Err(ApiError::busy());
    }
    let session = s.grabcut.get(&key).ok_or_else(|| no_session(&key))?;
    let depth_mask = s
        .project
        .masks
        .get(req.frame, Modality::Depth, req.instance)
        .ok_or_else(|| Error::NotFound { kind: "mask", id: format!("{}/depth/{}", req.frame, req.instance) })?;
    let depth = s.project.load_depth(req.frame as usize)?;
    let trimap = seed_rgb_from_depth(depth_mask, &depth, Some(&s.project.rig), &session.trimap, req.hardness)?;
    let summary = summarize(&trimap);
    if let Some(session) = s.grabcut.get_mut(&key) {
        session.trimap = trimap;
    }
    Ok(envelope(s.bump(), summary))
}
