//! Integer pixel rectangles, rectangle interpolation and inference from 3D boxes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bbox::model::Box3D;
use crate::bbox::visibility::{project_box, Rect2};
use crate::error::{Error, Result};
use crate::geometry::rig::{CameraKind, CameraRig};

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`; may extend past the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl PixelRect {
    pub const fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn from_size(x: i64, y: i64, width: i64, height: i64) -> Self {
        Self::new(x, y, x + width, y + height)
    }

    pub fn width(&self) -> i64 {
        (self.x1 - self.x0).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.y1 - self.y0).max(0)
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn intersect(&self, o: &PixelRect) -> PixelRect {
        PixelRect::new(self.x0.max(o.x0), self.y0.max(o.y0), self.x1.min(o.x1), self.y1.min(o.y1))
    }

    pub fn expand(&self, by: i64) -> PixelRect {
        PixelRect::new(self.x0 - by, self.y0 - by, self.x1 + by, self.y1 + by)
    }

    pub fn frame(width: usize, height: usize) -> PixelRect {
        PixelRect::new(0, 0, width as i64, height as i64)
    }

    /// Pixels whose centers fall inside the continuous rectangle.
    pub fn from_rect2(r: &Rect2) -> PixelRect {
        PixelRect::new(
            r.x0.ceil() as i64,
            r.y0.ceil() as i64,
            r.x1.floor() as i64 + 1,
            r.y1.floor() as i64 + 1,
        )
    }
}

/// Per-corner linear interpolation between key rectangles, one per frame from the
/// first to the last key.
pub fn interpolate_rects(keyrects: &BTreeMap<u32, Rect2>) -> Result<Vec<(u32, Rect2)>> {
    if keyrects.len() < 2 {
        return Err(Error::TooFewKeyframes(keyrects.len()));
    }
    let keys: Vec<(u32, Rect2)> = keyrects.iter().map(|(f, r)| (*f, *r)).collect();
    let mut out = Vec::new();
    for pair in keys.windows(2) {
        let ((f0, a), (f1, b)) = (pair[0], pair[1]);
        for f in f0..f1 {
            let u = (f - f0) as f64 / (f1 - f0) as f64;
            let lerp = |p: f64, q: f64| p + (q - p) * u;
            out.push((f, Rect2::new(lerp(a.x0, b.x0), lerp(a.y0, b.y0), lerp(a.x1, b.x1), lerp(a.y1, b.y1))));
        }
    }
    out.push(keys[keys.len() - 1]);
    Ok(out)
}

/// Segmentation rectangle from a box's projection into one camera.
pub fn infer_rect(b: &Box3D, rig: &CameraRig, which: CameraKind) -> Result<PixelRect> {
    let proj = project_box(b, rig, which)?;
    let rect = proj.rect.map(|r| PixelRect::from_rect2(&r)).ok_or(Error::EmptyRect)?;
    if rect.is_empty() {
        return Err(Error::EmptyRect);
    }
    Ok(rect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::model::TrackId;
    use crate::bbox::rotation::Quat;
    use crate::geometry::camera::CameraIntrinsics;
    use nalgebra::Vector3;

    #[test]
    fn identical_keys_stay_put() {
        let r = Rect2::new(1.0, 2.0, 3.0, 4.0);
        let keys = BTreeMap::from([(0, r), (4, r)]);
        let out = interpolate_rects(&keys).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|(_, q)| *q == r));
    }

    #[test]
    fn midpoint_and_two_segments() {
        let keys = BTreeMap::from([
            (0, Rect2::new(0.0, 0.0, 10.0, 10.0)),
            (10, Rect2::new(10.0, 0.0, 20.0, 10.0)),
            (14, Rect2::new(10.0, 4.0, 20.0, 18.0)),
        ]);
        let out = interpolate_rects(&keys).unwrap();
        assert_eq!(out.len(), 15);
        assert_eq!(out[5], (5, Rect2::new(5.0, 0.0, 15.0, 10.0)));
        // Second segment: a quarter of the way from frame 10 to 14.
        assert_eq!(out[11], (11, Rect2::new(10.0, 1.0, 20.0, 12.0)));
        assert!(matches!(interpolate_rects(&BTreeMap::from([(0, keys[&0])])), Err(Error::TooFewKeyframes(1))));
    }

    #[test]
    fn rect_from_projected_box() {
        let rig = CameraRig::coincident(CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap());
        let b = Box3D::new(TrackId(1), "c", 0, Vector3::new(0.0, 0.0, 5.0), Vector3::repeat(1.0), Quat::IDENTITY);
        let r = infer_rect(&b, &rig, CameraKind::Rgb).unwrap();
        assert_eq!(r, PixelRect::new(39, 39, 62, 62));
    }
}
