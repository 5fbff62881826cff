//! Keyframed 6-DoF boxes: tracks, interpolation, projection and visibility.

pub mod interpolate;
pub mod model;
pub mod rotation;
pub mod visibility;

pub use interpolate::{
    classify_segments, interpolate_track, interpolate_track_with, InterpolatedTrack,
    InterpolationMode, InterpolationOptions, SegmentMode, DEFAULT_EPSILON,
};
pub use model::{copy_box, Box3D, BoxTrack, TrackId, BOX_EDGES};
pub use rotation::{euler_to_quaternion, quaternion_to_euler, slerp_orientation, EulerAngles, Quat};
pub use visibility::{
    categorize_difficulty, compute_truncation, project_box, visibility, BoxProjection, Difficulty,
    Rect2, VisibilityInfo,
};

use crate::error::Result;
use crate::geometry::{CameraRig, ExtrinsicTransform};

/// Replaces the rig's world origin. Boxes keep their world coordinates, so their
/// camera-frame poses move with the origin.
pub fn set_world_origin(rig: &mut CameraRig, xf: ExtrinsicTransform) -> Result<()> {
    xf.validate()?;
    rig.world_origin = xf;
    Ok(())
}
