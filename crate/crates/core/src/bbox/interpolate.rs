//! Keyframe interpolation of box tracks.
//!
//! Sizes and occlusion are interpolated linearly, orientations by SLERP. Centers use
//! the hybrid rule: a natural cubic spline across any run of at least four
//! consecutive keyframes whose successive center distances all exceed `epsilon`,
//! straight lines everywhere else.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::model::{Box3D, BoxTrack};
use super::rotation::slerp_orientation;
use crate::error::{Error, Result};

/// Default motion threshold in meters.
pub const DEFAULT_EPSILON: f64 = 0.05;
/// Minimum number of consecutive moving keyframes that switches a run to cubic.
pub const MIN_CUBIC_RUN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMode {
    Linear,
    Cubic,
}

/// How a channel picks its per-gap segment modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMode {
    Linear,
    /// One natural spline through every keyframe.
    Cubic,
    #[default]
    Hybrid,
}

impl std::str::FromStr for InterpolationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "cubic" => Ok(Self::Cubic),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(Error::InvalidInput(format!("unknown interpolation mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for InterpolationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Cubic => "cubic",
            Self::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationOptions {
    pub epsilon: f64,
    pub center_mode: InterpolationMode,
    pub size_mode: InterpolationMode,
}

impl InterpolationOptions {
    pub fn hybrid(epsilon: f64) -> Self {
        Self { epsilon, center_mode: InterpolationMode::Hybrid, size_mode: InterpolationMode::Linear }
    }

    /// Applies `mode` to centers only, sizes stay linear.
    pub fn with_center_mode(epsilon: f64, mode: InterpolationMode) -> Self {
        Self { epsilon, center_mode: mode, size_mode: InterpolationMode::Linear }
    }
}

/// Gap classification by the hybrid rule, one entry per pair of consecutive keyframes.
pub fn classify_centers(centers: &[Vector3<f64>], epsilon: f64) -> Vec<SegmentMode> {
    let gaps = centers.len().saturating_sub(1);
    let moving: Vec<bool> = centers.windows(2).map(|w| (w[1] - w[0]).norm() > epsilon).collect();
    let mut modes = vec![SegmentMode::Linear; gaps];
    let mut start = 0;
    while start < gaps {
        if !moving[start] {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < gaps && moving[end] {
            end += 1;
        }
        // Gaps start..end span end - start + 1 keyframes.
        if end - start + 1 >= MIN_CUBIC_RUN {
            modes[start..end].fill(SegmentMode::Cubic);
        }
        start = end;
    }
    modes
}

pub fn classify_segments(track: &BoxTrack, epsilon: f64) -> Result<Vec<SegmentMode>> {
    if track.len() < 2 {
        return Err(Error::TooFewKeyframes(track.len()));
    }
    let centers: Vec<_> = track.keyframes().map(|b| b.center).collect();
    Ok(classify_centers(&centers, epsilon))
}

fn segment_modes(hybrid: &[SegmentMode], mode: InterpolationMode) -> Vec<SegmentMode> {
    match mode {
        InterpolationMode::Linear => vec![SegmentMode::Linear; hybrid.len()],
        InterpolationMode::Cubic => vec![SegmentMode::Cubic; hybrid.len()],
        InterpolationMode::Hybrid => hybrid.to_vec(),
    }
}

/// Natural cubic spline through vector-valued knots.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    knots: Vec<f64>,
    values: Vec<Vector3<f64>>,
    /// Second derivatives at the knots; zero at both ends.
    curvature: Vec<Vector3<f64>>,
}

impl NaturalSpline {
    /// Solves the tridiagonal system for knot curvatures (Thomas algorithm).
    pub fn fit(knots: &[f64], values: &[Vector3<f64>]) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::TooFewKeyframes(n.min(values.len())));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("spline knots must increase strictly".into()));
        }
        let mut curvature = vec![Vector3::zeros(); n];
        if n > 2 {
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![Vector3::zeros(); m];
            for i in 0..m {
                let k = i + 1;
                diag[i] = 2.0 * (h[k - 1] + h[k]);
                upper[i] = h[k];
                rhs[i] = 6.0
                    * ((values[k + 1] - values[k]) / h[k] - (values[k] - values[k - 1]) / h[k - 1]);
            }
            for i in 1..m {
                let lower = h[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                let prev = rhs[i - 1];
                rhs[i] -= prev * w;
            }
            curvature[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                curvature[i + 1] = (rhs[i] - curvature[i + 2] * upper[i]) / diag[i];
            }
        }
        Ok(Self { knots: knots.to_vec(), values: values.to_vec(), curvature })
    }

    pub fn eval(&self, t: f64) -> Vector3<f64> {
        let last = self.knots.len() - 2;
        let seg = self.knots.windows(2).position(|w| t <= w[1]).unwrap_or(last);
        let (t0, t1) = (self.knots[seg], self.knots[seg + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        let (m0, m1) = (self.curvature[seg], self.curvature[seg + 1]);
        self.values[seg] * a
            + self.values[seg + 1] * b
            + (m0 * (a * a * a - a) + m1 * (b * b * b - b)) * (h * h / 6.0)
    }
}

/// Evaluates a keyframed channel at every frame from the first to the last keyframe.
fn interpolate_channel(
    frames: &[u32],
    values: &[Vector3<f64>],
    modes: &[SegmentMode],
) -> Result<Vec<Vector3<f64>>> {
    let mut out = Vec::with_capacity((frames[frames.len() - 1] - frames[0] + 1) as usize);
    let mut gap = 0;
    while gap < modes.len() {
        let mut end = gap + 1;
        if modes[gap] == SegmentMode::Cubic {
            while end < modes.len() && modes[end] == SegmentMode::Cubic {
                end += 1;
            }
            let knots: Vec<f64> = frames[gap..=end].iter().map(|&f| f as f64).collect();
            let spline = NaturalSpline::fit(&knots, &values[gap..=end])?;
            for g in gap..end {
                out.push(values[g]);
                for f in frames[g] + 1..frames[g + 1] {
                    out.push(spline.eval(f as f64));
                }
            }
        } else {
            let (f0, f1) = (frames[gap], frames[gap + 1]);
            out.push(values[gap]);
            for f in f0 + 1..f1 {
                let u = (f - f0) as f64 / (f1 - f0) as f64;
                out.push(values[gap] + (values[gap + 1] - values[gap]) * u);
            }
        }
        gap = end;
    }
    out.push(values[values.len() - 1]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolatedTrack {
    /// One box per frame from the first to the last keyframe.
    pub boxes: Vec<Box3D>,
    /// Center segment modes, one per keyframe gap.
    pub segments: Vec<SegmentMode>,
}

pub fn interpolate_track_with(track: &BoxTrack, options: &InterpolationOptions) -> Result<InterpolatedTrack> {
    if track.len() < 2 {
        return Err(Error::TooFewKeyframes(track.len()));
    }
    let keys: Vec<&Box3D> = track.keyframes().collect();
    let frames: Vec<u32> = keys.iter().map(|b| b.frame_index).collect();
    let centers: Vec<Vector3<f64>> = keys.iter().map(|b| b.center).collect();
    let sizes: Vec<Vector3<f64>> = keys.iter().map(|b| b.size).collect();
    let hybrid = classify_centers(&centers, options.epsilon);
    let center_modes = segment_modes(&hybrid, options.center_mode);
    let size_modes = segment_modes(&hybrid, options.size_mode);
    let center_track = interpolate_channel(&frames, &centers, &center_modes)?;
    let size_track = interpolate_channel(&frames, &sizes, &size_modes)?;

    let first = frames[0];
    let mut boxes = Vec::with_capacity(center_track.len());
    for pair in keys.windows(2) {
        let (k0, k1) = (pair[0], pair[1]);
        boxes.push(k0.clone());
        let span = (k1.frame_index - k0.frame_index) as f64;
        for f in k0.frame_index + 1..k1.frame_index {
            let u = (f - k0.frame_index) as f64 / span;
            let idx = (f - first) as usize;
            let mut size = size_track[idx];
            // A spline may overshoot; sizes stay strictly positive.
            for s in size.iter_mut() {
                *s = s.max(f64::EPSILON);
            }
            boxes.push(Box3D {
                center: center_track[idx],
                size,
                orientation: slerp_orientation(&k0.orientation, &k1.orientation, u)?,
                frame_index: f,
                track_id: track.track_id,
                class_label: track.class_label.clone(),
                occlusion: k0.occlusion + (k1.occlusion - k0.occlusion) * u,
                is_keyframe: false,
            });
        }
    }
    boxes.push(keys[keys.len() - 1].clone());
    Ok(InterpolatedTrack { boxes, segments: center_modes })
}

/// Hybrid interpolation with linear sizes.
pub fn interpolate_track(track: &BoxTrack, epsilon: f64) -> Result<Vec<Box3D>> {
    Ok(interpolate_track_with(track, &InterpolationOptions::hybrid(epsilon))?.boxes)
}
