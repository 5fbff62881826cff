//! Interpolation-mode comparison against densely annotated truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::boxes::{ase, ate};
use crate::bbox::interpolate::{interpolate_track_with, InterpolationMode, InterpolationOptions};
use crate::bbox::model::{Box3D, BoxTrack};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameError {
    pub frame: u32,
    pub ate: f64,
    pub ase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEval {
    pub mode: InterpolationMode,
    pub ase: f64,
    pub ate: f64,
    pub frames: Vec<FrameError>,
}

impl ModeEval {
    /// Mean ATE over the frames in `range`, or NaN when none fall inside it.
    pub fn ate_over(&self, range: RangeInclusive<u32>) -> f64 {
        let v: Vec<f64> = self.frames.iter().filter(|e| range.contains(&e.frame)).map(|e| e.ate).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

/// Interpolates `track` with each mode (applied to centers and sizes alike) and
/// averages ASE/ATE against `truth` over every frame of the keyframe span.
pub fn compare_interpolation(
    track: &BoxTrack,
    truth: &[Box3D],
    modes: &[InterpolationMode],
    epsilon: f64,
) -> Result<Vec<ModeEval>> {
    let (first, last) = track.frame_span().ok_or(Error::TooFewKeyframes(0))?;
    if track.len() < 2 {
        return Err(Error::TooFewKeyframes(track.len()));
    }
    let by_frame: BTreeMap<u32, &Box3D> =
        truth.iter().filter(|b| b.track_id == track.track_id).map(|b| (b.frame_index, b)).collect();
    if let Some(missing) = (first..=last).find(|f| !by_frame.contains_key(f)) {
        return Err(Error::InvalidInput(format!("truth has no box at frame {missing}")));
    }
    modes
        .iter()
        .map(|&mode| {
            let options = InterpolationOptions { epsilon, center_mode: mode, size_mode: mode };
            let dense = interpolate_track_with(track, &options)?.boxes;
            let frames = dense
                .iter()
                .map(|b| {
                    let t = by_frame[&b.frame_index];
                    Ok(FrameError { frame: b.frame_index, ate: ate(b, t), ase: ase(b, t)? })
                })
                .collect::<Result<Vec<_>>>()?;
            let n = frames.len() as f64;
            Ok(ModeEval {
                mode,
                ase: frames.iter().map(|e| e.ase).sum::<f64>() / n,
                ate: frames.iter().map(|e| e.ate).sum::<f64>() / n,
                frames,
            })
        })
        .collect()
}

pub fn comparison_text(rows: &[ModeEval]) -> String {
    let mut s = format!("{:<8} {:>10} {:>10}\n", "mode", "ASE", "ATE [m]");
    for r in rows {
        let _ = writeln!(s, "{:<8} {:>10.4} {:>10.4}", r.mode.to_string(), r.ase, r.ate);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::model::TrackId;
    use crate::bbox::rotation::Quat;
    use nalgebra::Vector3;

    const ALL: [InterpolationMode; 3] = [InterpolationMode::Linear, InterpolationMode::Cubic, InterpolationMode::Hybrid];

    fn truth_from(f: impl Fn(u32) -> Vector3<f64>, frames: u32) -> Vec<Box3D> {
        (0..frames)
            .map(|i| Box3D::new(TrackId(7), "ped", i, f(i), Vector3::new(0.6, 0.6, 1.8), Quat::IDENTITY))
            .collect()
    }

    fn keyframes(truth: &[Box3D], step: usize) -> BoxTrack {
        BoxTrack::from_keyframes(TrackId(7), "ped", truth.iter().step_by(step).cloned()).unwrap()
    }

    #[test]
    fn static_truth_gives_zero_error() {
        let truth = truth_from(|_| Vector3::new(1.0, 2.0, 3.0), 26);
        for row in compare_interpolation(&keyframes(&truth, 5), &truth, &ALL, 0.05).unwrap() {
            assert!(row.ate < 1e-12 && row.ase < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn cubic_motion_favors_hybrid_over_linear() {
        let truth = truth_from(|i| Vector3::new((i as f64).powi(3) / 1000.0, 0.0, 0.0), 41);
        let rows = compare_interpolation(&keyframes(&truth, 5), &truth, &ALL, 0.05).unwrap();
        assert!(rows[2].ate < rows[0].ate);
        assert!(comparison_text(&rows).lines().count() == 4);
    }

    #[test]
    fn sparse_truth_is_rejected() {
        let truth = truth_from(|i| Vector3::new(i as f64, 0.0, 0.0), 11);
        let track = keyframes(&truth, 5);
        let gappy: Vec<Box3D> = truth.into_iter().filter(|b| b.frame_index != 3).collect();
        assert!(matches!(compare_interpolation(&track, &gappy, &ALL, 0.05), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn single_keyframe_is_too_few() {
        let truth = truth_from(|_| Vector3::zeros(), 3);
        let track = BoxTrack::from_keyframes(TrackId(7), "ped", truth[..1].iter().cloned()).unwrap();
        assert!(matches!(compare_interpolation(&track, &truth, &ALL, 0.05), Err(Error::TooFewKeyframes(1))));
    }
}
