//! Camera models, undistortion and 2D/3D projection.

pub mod camera;
pub mod depth;
pub mod rig;
pub mod undistort;

pub use camera::{
    distort_point, project_point, undistort_point, CameraIntrinsics, DistortionCoeffs,
    ExtrinsicTransform,
};
pub use depth::{backproject_depth, transform_points, DepthMap, PointCloud};
pub use rig::{CameraKind, CameraModel, CameraRig};
pub use undistort::{
    compute_optimal_camera_matrix, undistort_depth, undistort_rgb, OptimalCamera, PixelExtent,
};
