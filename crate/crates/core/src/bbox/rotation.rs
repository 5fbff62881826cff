//! Unit quaternions, z-y-x Euler angles and spherical linear interpolation.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-9;
/// Below this arc angle SLERP degenerates to normalized linear interpolation.
pub const SLERP_LINEAR_THRESHOLD: f64 = 1e-6;
const GIMBAL_TOLERANCE: f64 = 1e-9;

/// Quaternion `w + xi + yj + zk`, serialized as `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Quat {
    fn from(v: [f64; 4]) -> Self {
        Quat { w: v[0], x: v[1], y: v[2], z: v[3] }
    }
}

impl From<Quat> for [f64; 4] {
    fn from(q: Quat) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let axis = axis.normalize();
        let (s, c) = (angle / 2.0).sin_cos();
        Self { w: c, x: axis.x * s, y: axis.y * s, z: axis.z * s }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn scale(&self, s: f64) -> Quat {
        Quat { w: self.w * s, x: self.x * s, y: self.y * s, z: self.z * s }
    }

    pub fn add(&self, o: &Quat) -> Quat {
        Quat { w: self.w + o.w, x: self.x + o.x, y: self.y + o.y, z: self.z + o.z }
    }

    pub fn neg(&self) -> Quat {
        self.scale(-1.0)
    }

    pub fn normalized(&self) -> Quat {
        self.scale(1.0 / self.norm())
    }

    pub fn conjugate(&self) -> Quat {
        Quat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Hamilton product `self * o` (apply `o` first).
    pub fn mul(&self, o: &Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    pub fn ensure_unit(&self) -> Result<()> {
        if self.is_unit() {
            Ok(())
        } else {
            Err(Error::NonUnitQuaternion(self.norm()))
        }
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let Quat { w, x, y, z } = *self;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Rotation angle in `[0, π]` between two orientations.
    pub fn angle_to(&self, o: &Quat) -> f64 {
        let d = self.conjugate().mul(o);
        2.0 * (d.x * d.x + d.y * d.y + d.z * d.z).sqrt().atan2(d.w.abs())
    }
}

/// Rotations about z (yaw), then y (pitch), then x (roll): `R = Rz · Ry · Rx`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

pub fn euler_to_quaternion(e: &EulerAngles) -> Quat {
    let qz = Quat::from_axis_angle(Vector3::z(), e.yaw);
    let qy = Quat::from_axis_angle(Vector3::y(), e.pitch);
    let qx = Quat::from_axis_angle(Vector3::x(), e.roll);
    qz.mul(&qy).mul(&qx)
}

/// Recovers z-y-x angles with pitch in `[-π/2, π/2]`.
///
/// The flag is set when pitch sits at ±π/2; yaw and roll are then coupled and roll
/// is reported as zero.
pub fn quaternion_to_euler(q: &Quat) -> Result<(EulerAngles, bool)> {
    q.ensure_unit()?;
    let r = q.to_rotation_matrix();
    let cos_pitch = r[(0, 0)].hypot(r[(1, 0)]);
    let pitch = (-r[(2, 0)]).atan2(cos_pitch);
    if cos_pitch < GIMBAL_TOLERANCE {
        // Only yaw ∓ roll is observable; fold it all into yaw.
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]);
        return Ok((EulerAngles { yaw, pitch, roll: 0.0 }, true));
    }
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    Ok((EulerAngles { yaw, pitch: pitch.clamp(-FRAC_PI_2, FRAC_PI_2), roll }, false))
}

/// Shortest-arc spherical linear interpolation at constant angular velocity.
pub fn slerp_orientation(q0: &Quat, q1: &Quat, u: f64) -> Result<Quat> {
    q0.ensure_unit()?;
    q1.ensure_unit()?;
    if u == 0.0 {
        return Ok(*q0);
    }
    let mut target = *q1;
    let mut cos_half = q0.dot(q1);
    if cos_half < 0.0 {
        target = target.neg();
        cos_half = -cos_half;
    }
    if u == 1.0 {
        return Ok(*q1);
    }
    let half_angle = cos_half.min(1.0).acos();
    if 2.0 * half_angle < SLERP_LINEAR_THRESHOLD {
        return Ok(q0.scale(1.0 - u).add(&target.scale(u)).normalized());
    }
    let sin_half = half_angle.sin();
    let a = ((1.0 - u) * half_angle).sin() / sin_half;
    let b = (u * half_angle).sin() / sin_half;
    Ok(q0.scale(a).add(&target.scale(b)))
}
