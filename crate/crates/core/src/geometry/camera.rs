//! Pinhole intrinsics, Brown–Conrady lens distortion and rigid transforms.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration cap of the undistortion fixed-point solver.
pub const UNDISTORT_MAX_ITERATIONS: usize = 50;
/// Residual tolerance (normalized units) of the undistortion solver.
pub const UNDISTORT_TOLERANCE: f64 = 1e-10;

/// Pinhole camera parameters in pixels.
///
/// Pixel `(col, row)` covers the square `[col - 0.5, col + 0.5] x [row - 0.5, row + 0.5]`,
/// so the image extent is `[-0.5, width - 0.5] x [-0.5, height - 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let intr = Self { fx, fy, cx, cy, width, height };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidIntrinsics("non-finite parameter".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidIntrinsics("image size must be positive".into()));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Pixel coordinates to normalized image coordinates.
    pub fn normalize(&self, pixel: Vector2<f64>) -> Vector2<f64> {
        Vector2::new((pixel.x - self.cx) / self.fx, (pixel.y - self.cy) / self.fy)
    }

    /// Normalized image coordinates to pixel coordinates.
    pub fn denormalize(&self, norm: Vector2<f64>) -> Vector2<f64> {
        Vector2::new(self.fx * norm.x + self.cx, self.fy * norm.y + self.cy)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width as usize, self.height as usize)
    }

    /// Whether a continuous pixel coordinate falls on the image.
    pub fn contains(&self, pixel: Vector2<f64>) -> bool {
        pixel.x >= -0.5
            && pixel.y >= -0.5
            && pixel.x < self.width as f64 - 0.5
            && pixel.y < self.height as f64 - 0.5
    }
}

/// Projects a camera-frame point (meters) onto the image plane.
///
/// The result may lie outside the image; callers clip.
pub fn project_point(p: &Vector3<f64>, intr: &CameraIntrinsics) -> Result<Vector2<f64>> {
    if p.z <= 0.0 {
        return Err(Error::PointBehindCamera { z: p.z });
    }
    Ok(Vector2::new(intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy))
}

/// Brown–Conrady coefficients: radial `k1, k2, k3`, tangential `p1, p2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistortionCoeffs {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl DistortionCoeffs {
    pub fn radial(k1: f64, k2: f64, k3: f64) -> Self {
        Self { k1, k2, k3, ..Self::default() }
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.k3 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if [self.k1, self.k2, self.k3, self.p1, self.p2].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidCalibration("non-finite distortion coefficient".into()))
        }
    }

    fn radial_factor(&self, r2: f64) -> f64 {
        1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }

    fn tangential(&self, x: f64, y: f64, r2: f64) -> Vector2<f64> {
        Vector2::new(
            2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x),
            self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y,
        )
    }
}

/// Applies the forward distortion model to a normalized point.
pub fn distort_point(p: Vector2<f64>, d: &DistortionCoeffs) -> Vector2<f64> {
    let r2 = p.norm_squared();
    p * d.radial_factor(r2) + d.tangential(p.x, p.y, r2)
}

/// Inverts [`distort_point`] by damped fixed-point iteration.
///
/// Each step proposes `x' = (p - tangential(x)) / radial(x)`; the step is halved
/// whenever it would increase the residual `|distort(x) - p|`.
pub fn undistort_point(p: Vector2<f64>, d: &DistortionCoeffs) -> Result<Vector2<f64>> {
    if d.is_zero() {
        return Ok(p);
    }
    let residual_of = |x: &Vector2<f64>| (distort_point(*x, d) - p).norm();
    let mut x = p;
    let mut residual = residual_of(&x);
    let mut damping = 1.0;
    for _ in 0..UNDISTORT_MAX_ITERATIONS {
        if residual < UNDISTORT_TOLERANCE {
            return Ok(x);
        }
        let r2 = x.norm_squared();
        let radial = d.radial_factor(r2);
        if radial.abs() < f64::EPSILON || !radial.is_finite() {
            break;
        }
        let target = (p - d.tangential(x.x, x.y, r2)) / radial;
        let candidate = x + (target - x) * damping;
        let candidate_residual = residual_of(&candidate);
        if candidate_residual.is_finite() && candidate_residual <= residual {
            x = candidate;
            residual = candidate_residual;
            damping = (damping * 2.0).min(1.0);
        } else {
            damping *= 0.5;
        }
    }
    if residual < UNDISTORT_TOLERANCE {
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: UNDISTORT_MAX_ITERATIONS, residual })
    }
}

/// Rigid transform `p' = R p + t` (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "TransformRepr", into = "TransformRepr")]
pub struct ExtrinsicTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

const ROTATION_TOLERANCE: f64 = 1e-9;

impl ExtrinsicTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let xf = Self { rotation, translation };
        xf.validate()?;
        Ok(xf)
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self { rotation: Matrix3::identity(), translation: t }
    }

    /// Checks orthonormality and a positive determinant within 1e-9.
    pub fn validate(&self) -> Result<()> {
        if !self.rotation.iter().chain(self.translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let gram_error = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        if gram_error > ROTATION_TOLERANCE {
            return Err(Error::InvalidRotation(format!("R^T R deviates from I by {gram_error:e}")));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::InvalidRotation(format!("determinant {det}")));
        }
        Ok(())
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &ExtrinsicTransform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

impl Default for ExtrinsicTransform {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl From<TransformRepr> for ExtrinsicTransform {
    fn from(r: TransformRepr) -> Self {
        let m = r.rotation;
        Self {
            rotation: Matrix3::new(
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            ),
            translation: Vector3::from(r.translation),
        }
    }
}

impl From<ExtrinsicTransform> for TransformRepr {
    fn from(x: ExtrinsicTransform) -> Self {
        let m = x.rotation;
        TransformRepr {
            rotation: [
                [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            ],
            translation: [x.translation.x, x.translation.y, x.translation.z],
        }
    }
}

/// Rotation about the z axis by `angle` radians (x toward y).
pub fn rotation_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rotation_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rotation_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}
