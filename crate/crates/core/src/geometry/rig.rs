use serde::{Deserialize, Serialize};

use super::camera::{CameraIntrinsics, DistortionCoeffs, ExtrinsicTransform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub intrinsics: CameraIntrinsics,
    #[serde(default)]
    pub distortion: DistortionCoeffs,
}

impl CameraModel {
    pub fn pinhole(intrinsics: CameraIntrinsics) -> Self {
        Self { intrinsics, distortion: DistortionCoeffs::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraKind {
    Rgb,
    Depth,
}

/// Calibration of an RGB-D camera pair placed in a world frame.
///
/// `rgb_from_depth` maps depth-camera coordinates into the RGB camera frame.
/// `world_origin` maps depth-camera coordinates into world coordinates, so moving the
/// origin by `t` shifts every world-fixed point by `-Rᵀ t` as seen from the camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub rgb: CameraModel,
    pub depth: CameraModel,
    pub rgb_from_depth: ExtrinsicTransform,
    pub world_origin: ExtrinsicTransform,
}

impl CameraRig {
    /// Both cameras share `intrinsics`, coincide, and define the world frame.
    pub fn coincident(intrinsics: CameraIntrinsics) -> Self {
        Self {
            rgb: CameraModel::pinhole(intrinsics),
            depth: CameraModel::pinhole(intrinsics),
            rgb_from_depth: ExtrinsicTransform::identity(),
            world_origin: ExtrinsicTransform::identity(),
        }
    }

    pub fn camera(&self, kind: CameraKind) -> &CameraModel {
        match kind {
            CameraKind::Rgb => &self.rgb,
            CameraKind::Depth => &self.depth,
        }
    }

    pub fn intrinsics(&self, kind: CameraKind) -> &CameraIntrinsics {
        &self.camera(kind).intrinsics
    }

    /// Transform taking world coordinates into the chosen camera's frame.
    pub fn camera_from_world(&self, kind: CameraKind) -> ExtrinsicTransform {
        let depth_from_world = self.world_origin.inverse();
        match kind {
            CameraKind::Depth => depth_from_world,
            CameraKind::Rgb => self.rgb_from_depth.compose(&depth_from_world),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let calib = |e: Error| Error::InvalidCalibration(e.to_string());
        self.rgb.intrinsics.validate().map_err(calib)?;
        self.depth.intrinsics.validate().map_err(calib)?;
        self.rgb.distortion.validate()?;
        self.depth.distortion.validate()?;
        self.rgb_from_depth
            .validate()
            .map_err(|e| Error::InvalidCalibration(format!("rgb_from_depth: {e}")))?;
        self.world_origin
            .validate()
            .map_err(|e| Error::InvalidCalibration(format!("world_origin: {e}")))?;
        Ok(())
    }
}
