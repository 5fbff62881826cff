//! Translation, scale and orientation errors between boxes.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::bbox::model::Box3D;
use crate::error::{Error, Result};
use crate::geometry::camera::ExtrinsicTransform;

/// Euclidean distance between centers.
pub fn ate(a: &Box3D, b: &Box3D) -> f64 {
    (a.center - b.center).norm()
}

/// One minus the IoU of the two sizes once centers and orientations are aligned.
pub fn ase(a: &Box3D, b: &Box3D) -> Result<f64> {
    if !a.size.iter().chain(b.size.iter()).all(|&s| s > 0.0) {
        return Err(Error::NonPositiveSize);
    }
    let inter: f64 = a.size.iter().zip(b.size.iter()).map(|(x, y)| x.min(*y)).product();
    let hull: f64 = a.size.iter().zip(b.size.iter()).map(|(x, y)| x.max(*y)).product();
    Ok(1.0 - inter / hull)
}

/// `arccos((tr(Ru Rgtᵀ) - 1) / 2)` with the argument clamped to `[-1, 1]`.
pub fn aoe(ru: &Matrix3<f64>, rgt: &Matrix3<f64>) -> Result<f64> {
    for r in [ru, rgt] {
        ExtrinsicTransform { rotation: *r, translation: Default::default() }.validate()?;
    }
    let c = (((ru * rgt.transpose()).trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    Ok(c.acos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxPairEval {
    pub ate: f64,
    pub ase: f64,
    pub aoe: f64,
}

pub fn evaluate_box_pair(user: &Box3D, truth: &Box3D) -> Result<BoxPairEval> {
    Ok(BoxPairEval { ate: ate(user, truth), ase: ase(user, truth)?, aoe: aoe(&user.rotation(), &truth.rotation())? })
}
