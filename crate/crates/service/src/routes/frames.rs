use axum::extract::State;
use axum::response::Response;
use serde::{Deserialize, Serialize};

use rgbd_annotate::project::io::png_bytes;
use rgbd_annotate::segmentation::colormap_depth;

use super::{envelope, png};
use crate::error::ApiResult;
use crate::extract::{PathParams, QueryParams};
use crate::state::AppState;

pub async fn rgb(State(app): State<AppState>, PathParams(frame): PathParams<usize>) -> ApiResult<Response> {
    let img = app.session().project.load_rgb(frame)?;
    Ok(png(png_bytes(&img)?))
}

#[derive(Debug, Default, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "snake_case")]
pub enum DepthFormat {
    /// 16-bit millimeters as stored.
    Raw,
    #[default]
    Color,
    Gray,
}

#[derive(Deserialize)]
pub struct DepthQuery {
    #[serde(default)]
    format: DepthFormat,
}

pub async fn depth(
    State(app): State<AppState>,
    PathParams(frame): PathParams<usize>,
    QueryParams(q): QueryParams<DepthQuery>,
) -> ApiResult<Response> {
    let (depth, [lo, hi]) = {
        let s = app.session();
        (s.project.load_depth(frame)?, s.project.config.depth_range)
    };
    let bytes = match q.format {
        DepthFormat::Raw => png_bytes(&depth.to_image())?,
        DepthFormat::Color => png_bytes(&colormap_depth(&depth, lo, hi)?.0)?,
        DepthFormat::Gray => png_bytes(&colormap_depth(&depth, lo, hi)?.1)?,
    };
    Ok(png(bytes))
}

#[derive(Deserialize)]
pub struct CloudQuery {
    cap: Option<usize>,
}

#[derive(Serialize)]
struct CloudBody {
    /// World coordinates in meters.
    points: Vec<[f64; 3]>,
    /// Depth pixel `[row, col]` of each point.
    pixels: Vec<[usize; 2]>,
}

pub async fn cloud(
    State(app): State<AppState>,
    PathParams(frame): PathParams<usize>,
    QueryParams(q): QueryParams<CloudQuery>,
) -> ApiResult<Response> {
    let s = app.session();
    let cloud = s.cloud(frame, q.cap.unwrap_or(s.project.config.cloud_cap))?;
    let body = CloudBody {
        points: cloud.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        pixels: cloud.source_pixel.iter().map(|&(r, c)| [r, c]).collect(),
    };
    Ok(envelope(s.revision(), body))
}
