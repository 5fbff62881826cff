//! Rectangle selection of cloud points from an interactive viewpoint.

use std::collections::BTreeSet;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::mask::{BinaryMask, InstanceMask, Modality};
use crate::bbox::visibility::Rect2;
use crate::error::{Error, Result};
use crate::geometry::depth::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Add,
    Remove,
}

/// A viewport rectangle under a given view and projection (column-vector convention,
/// clip = projection · view · point). Viewport `y` grows downwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRect3D {
    pub view: Matrix4<f64>,
    pub projection: Matrix4<f64>,
    pub viewport: [f64; 2],
    pub rect: Rect2,
    pub mode: SelectionMode,
}

impl SelectionRect3D {
    /// Viewport position of a point in front of the viewer.
    pub fn project(&self, p: &nalgebra::Vector3<f64>) -> Option<[f64; 2]> {
        let clip = self.projection * self.view * Vector4::new(p.x, p.y, p.z, 1.0);
        if clip.w <= 0.0 {
            return None;
        }
        let (nx, ny) = (clip.x / clip.w, clip.y / clip.w);
        Some([(nx + 1.0) / 2.0 * self.viewport[0], (1.0 - ny) / 2.0 * self.viewport[1]])
    }
}

/// Adds or removes the points whose projection falls inside the rectangle.
pub fn select_points(cloud: &PointCloud, sel: &SelectionRect3D, current: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    if (sel.projection * sel.view).determinant().abs() < 1e-12 {
        return Err(Error::DegenerateView);
    }
    if sel.rect.is_empty() {
        return Err(Error::EmptyRect);
    }
    let r = &sel.rect;
    let hits = cloud.points.iter().enumerate().filter_map(|(i, p)| {
        let [x, y] = sel.project(p)?;
        (x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1).then_some(i)
    });
    let mut out = current.clone();
    match sel.mode {
        SelectionMode::Add => out.extend(hits),
        SelectionMode::Remove => {
            for i in hits {
                out.remove(&i);
            }
        }
    }
    Ok(out)
}

/// Depth-frame mask of the pixels the selected points came from.
pub fn mask_from_selection(
    selection: &BTreeSet<usize>,
    cloud: &PointCloud,
    width: usize,
    height: usize,
    instance_id: u32,
    frame_index: u32,
) -> Result<InstanceMask> {
    let mut mask = BinaryMask::new(width, height);
    for &i in selection {
        let &(row, col) = cloud
            .source_pixel
            .get(i)
            .ok_or_else(|| Error::InvalidInput(format!("point index {i} out of range")))?;
        if row >= height || col >= width {
            return Err(Error::DimensionMismatch { expected: (width, height), actual: (col + 1, row + 1) });
        }
        mask.set(row, col, true);
    }
    Ok(InstanceMask { instance_id, frame_index, modality: Modality::Depth, mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::camera::CameraIntrinsics;
    use crate::geometry::depth::{backproject_depth, DepthMap};
    use nalgebra::Vector3;

    /// OpenGL-style perspective looking down -z from the origin.
    fn perspective(fovy: f64, aspect: f64, near: f64, far: f64) -> Matrix4<f64> {
        let f = 1.0 / (fovy / 2.0).tan();
        Matrix4::new(
            f / aspect, 0.0, 0.0, 0.0,
            0.0, f, 0.0, 0.0,
            0.0, 0.0, (far + near) / (near - far), 2.0 * far * near / (near - far),
            0.0, 0.0, -1.0, 0.0,
        )
    }

    fn selection(rect: Rect2, mode: SelectionMode) -> SelectionRect3D {
        SelectionRect3D {
            view: Matrix4::identity(),
            projection: perspective(std::f64::consts::FRAC_PI_2, 1.0, 0.1, 100.0),
            viewport: [200.0, 200.0],
            rect,
            mode,
        }
    }

    fn cloud(points: Vec<Vector3<f64>>) -> PointCloud {
        let source_pixel = (0..points.len()).map(|i| (0, i)).collect();
        PointCloud { points, source_pixel }
    }

    #[test]
    fn left_half_picks_left_point() {
        // With a 90° field of view, x = ±1 at depth 5 lands at ndc ±0.2, i.e. columns 80 and 120.
        let c = cloud(vec![Vector3::new(-1.0, 0.0, -5.0), Vector3::new(1.0, 0.0, -5.0)]);
        let sel = selection(Rect2::new(0.0, 0.0, 100.0, 200.0), SelectionMode::Add);
        let [x, _] = sel.project(&c.points[0]).unwrap();
        assert!((x - 80.0).abs() < 1e-9);
        assert_eq!(select_points(&c, &sel, &BTreeSet::new()).unwrap(), BTreeSet::from([0]));
    }

    #[test]
    fn full_viewport_selects_visible_points_only() {
        let c = cloud(vec![Vector3::new(0.0, 0.0, -2.0), Vector3::new(0.5, 0.5, -3.0), Vector3::new(0.0, 0.0, 4.0)]);
        let all = select_points(&c, &selection(Rect2::new(0.0, 0.0, 200.0, 200.0), SelectionMode::Add), &BTreeSet::new())
            .unwrap();
        assert_eq!(all, BTreeSet::from([0, 1]));
        let none = select_points(&c, &selection(Rect2::new(0.0, 0.0, 200.0, 200.0), SelectionMode::Remove), &BTreeSet::new())
            .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn add_then_remove_restores() {
        let c = cloud((0..50).map(|i| Vector3::new((i as f64 - 25.0) * 0.1, (i % 7) as f64 * 0.2 - 0.6, -4.0)).collect());
        let rect = Rect2::new(30.0, 20.0, 110.0, 150.0);
        let add = selection(rect, SelectionMode::Add);
        let inside = select_points(&c, &add, &BTreeSet::new()).unwrap();
        assert!(!inside.is_empty() && inside.len() < 50);
        let prior: BTreeSet<usize> = (0..50).filter(|i| !inside.contains(i)).step_by(3).collect();
        let added = select_points(&c, &add, &prior).unwrap();
        assert_eq!(added.len(), prior.len() + inside.len());
        let back = select_points(&c, &selection(rect, SelectionMode::Remove), &added).unwrap();
        assert_eq!(back, prior);
    }

    #[test]
    fn singular_view_is_rejected() {
        let mut sel = selection(Rect2::new(0.0, 0.0, 1.0, 1.0), SelectionMode::Add);
        sel.view = Matrix4::zeros();
        assert!(matches!(select_points(&cloud(vec![]), &sel, &BTreeSet::new()), Err(Error::DegenerateView)));
    }

    #[test]
    fn selection_masks() {
        let intr = CameraIntrinsics::new(10.0, 10.0, 2.0, 2.0, 5, 4).unwrap();
        let mut depth = DepthMap::zeros(5, 4);
        for (r, c) in [(0, 0), (1, 3), (3, 4), (2, 2)] {
            depth.set(r, c, 800);
        }
        let pc = backproject_depth(&depth, &intr).unwrap();
        let empty = mask_from_selection(&BTreeSet::new(), &pc, 5, 4, 1, 0).unwrap();
        assert!(empty.mask.is_empty());
        let all: BTreeSet<usize> = (0..pc.len()).collect();
        let full = mask_from_selection(&all, &pc, 5, 4, 1, 0).unwrap();
        for r in 0..4 {
            for c in 0..5 {
                assert_eq!(full.mask.get(r, c), depth.get(r, c) != 0);
            }
        }
        let two = mask_from_selection(&BTreeSet::from([0, 2]), &pc, 5, 4, 1, 0).unwrap();
        assert_eq!(two.mask.count(), 2);
        assert!(mask_from_selection(&BTreeSet::from([9]), &pc, 5, 4, 1, 0).is_err());
    }
}
