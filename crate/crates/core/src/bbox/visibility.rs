//! Projection of boxes into the cameras, truncation, visibility and difficulty.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::model::{Box3D, BOX_EDGES};
use crate::error::{Error, Result};
use crate::geometry::camera::CameraIntrinsics;
use crate::geometry::rig::{CameraKind, CameraRig};

/// Depth of the plane box edges are clipped against before projection (meters).
pub const NEAR_PLANE: f64 = 0.01;
/// Projected hulls smaller than this (px²) are treated as degenerate.
pub const MIN_HULL_AREA: f64 = 1.0;

type Point = Vector2<f64>;

/// Convex hull (counter-clockwise, y up convention) by Andrew's monotone chain.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Point, a: &Point, b: &Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Absolute polygon area by the shoelace formula.
pub fn polygon_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..poly.len())
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice.abs() / 2.0
}

/// Sutherland–Hodgman clipping of a polygon to an axis-aligned rectangle.
pub fn clip_to_rect(poly: &[Point], x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
    // Each half-plane as (inside predicate, intersection with the boundary line).
    fn clip_edge(
        input: Vec<Point>,
        inside: impl Fn(&Point) -> bool,
        cut: impl Fn(&Point, &Point) -> Point,
    ) -> Vec<Point> {
        let mut out = Vec::with_capacity(input.len() + 4);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            match (inside(&cur), inside(&prev)) {
                (true, true) => out.push(cur),
                (true, false) => {
                    out.push(cut(&prev, &cur));
                    out.push(cur);
                }
                (false, true) => out.push(cut(&prev, &cur)),
                (false, false) => {}
            }
        }
        out
    }
    let at_x = |x: f64| {
        move |a: &Point, b: &Point| {
            let t = (x - a.x) / (b.x - a.x);
            Point::new(x, a.y + t * (b.y - a.y))
        }
    };
    let at_y = |y: f64| {
        move |a: &Point, b: &Point| {
            let t = (y - a.y) / (b.y - a.y);
            Point::new(a.x + t * (b.x - a.x), y)
        }
    };
    let mut p = poly.to_vec();
    p = clip_edge(p, |q| q.x >= x0, at_x(x0));
    if p.is_empty() {
        return p;
    }
    p = clip_edge(p, |q| q.x <= x1, at_x(x1));
    if p.is_empty() {
        return p;
    }
    p = clip_edge(p, |q| q.y >= y0, at_y(y0));
    if p.is_empty() {
        return p;
    }
    clip_edge(p, |q| q.y <= y1, at_y(y1))
}

/// Box corners and edge crossings of the near plane, in camera coordinates.
fn front_geometry(b: &Box3D, rig: &CameraRig, which: CameraKind) -> Vec<Vector3<f64>> {
    let xf = rig.camera_from_world(which);
    let corners = b.corners().map(|c| xf.apply(&c));
    let mut pts: Vec<Vector3<f64>> = corners.iter().filter(|c| c.z >= NEAR_PLANE).copied().collect();
    for (i, j) in BOX_EDGES {
        let (a, c) = (corners[i], corners[j]);
        if (a.z < NEAR_PLANE) != (c.z < NEAR_PLANE) {
            let t = (NEAR_PLANE - a.z) / (c.z - a.z);
            pts.push(a + (c - a) * t);
        }
    }
    pts
}

fn project_all(pts: &[Vector3<f64>], intr: &CameraIntrinsics) -> Vec<Point> {
    pts.iter()
        .map(|p| Point::new(intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy))
        .collect()
}

fn image_bounds(intr: &CameraIntrinsics) -> (f64, f64, f64, f64) {
    (-0.5, -0.5, intr.width as f64 - 0.5, intr.height as f64 - 0.5)
}

/// Fraction of the projected box hull that falls outside the image.
///
/// Boxes entirely behind the camera are fully truncated. A hull smaller than one
/// square pixel yields [`Error::DegenerateProjection`] carrying the fallback value:
/// 0 if its centroid is on the image, 1 otherwise.
pub fn compute_truncation(b: &Box3D, rig: &CameraRig, which: CameraKind) -> Result<f64> {
    let intr = rig.intrinsics(which);
    let front = front_geometry(b, rig, which);
    if front.is_empty() {
        return Ok(1.0);
    }
    let hull = convex_hull(&project_all(&front, intr));
    let full = polygon_area(&hull);
    if full < MIN_HULL_AREA {
        let centroid = hull.iter().sum::<Point>() / hull.len().max(1) as f64;
        let fallback = if intr.contains(centroid) { 0.0 } else { 1.0 };
        return Err(Error::DegenerateProjection { fallback });
    }
    let (x0, y0, x1, y1) = image_bounds(intr);
    let inside = polygon_area(&clip_to_rect(&hull, x0, y0, x1, y1));
    Ok((1.0 - inside / full).clamp(0.0, 1.0))
}

/// Truncation with the degenerate case resolved to its fallback.
pub fn truncation_or_fallback(b: &Box3D, rig: &CameraRig, which: CameraKind) -> Result<f64> {
    match compute_truncation(b, rig, which) {
        Err(Error::DegenerateProjection { fallback }) => Ok(fallback),
        other => other,
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}

/// `v = (1 - t)(1 - o)`.
pub fn visibility(truncation: f64, occlusion: f64) -> Result<f64> {
    check_unit("truncation", truncation)?;
    check_unit("occlusion", occlusion)?;
    Ok((1.0 - truncation) * (1.0 - occlusion))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityInfo {
    pub truncation: f64,
    pub occlusion: f64,
    pub visibility: f64,
}

impl VisibilityInfo {
    pub fn new(truncation: f64, occlusion: f64) -> Result<Self> {
        Ok(Self { truncation, occlusion, visibility: visibility(truncation, occlusion)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    Unknown,
}

impl Difficulty {
    pub fn as_str(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
            Difficulty::Unknown => "unknown",
        }
    }
}

/// KITTI-style buckets on truncation and occlusion.
pub fn categorize_difficulty(truncation: f64, occlusion: f64) -> Result<Difficulty> {
    check_unit("truncation", truncation)?;
    check_unit("occlusion", occlusion)?;
    Ok(if truncation <= 0.15 && occlusion <= 0.2 {
        Difficulty::Easy
    } else if truncation <= 0.30 && occlusion <= 0.5 {
        Difficulty::Moderate
    } else if truncation <= 0.50 {
        Difficulty::Hard
    } else {
        Difficulty::Unknown
    })
}

/// Axis-aligned pixel rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect2 {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect2 {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn is_empty(&self) -> bool {
        !(self.x1 > self.x0 && self.y1 > self.y0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxProjection {
    /// Pixel position of each corner, `None` for corners behind the near plane.
    pub corners: [Option<[f64; 2]>; 8],
    /// Enclosing rectangle clipped to the image; `None` when it misses the image.
    pub rect: Option<Rect2>,
}

pub fn project_box(b: &Box3D, rig: &CameraRig, which: CameraKind) -> Result<BoxProjection> {
    let intr = rig.intrinsics(which);
    let xf = rig.camera_from_world(which);
    let corners = b.corners().map(|c| {
        let p = xf.apply(&c);
        (p.z >= NEAR_PLANE)
            .then(|| [intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy])
    });
    let front = front_geometry(b, rig, which);
    if front.is_empty() {
        return Err(Error::AllCornersBehindCamera);
    }
    let pts = project_all(&front, intr);
    let (bx0, by0, bx1, by1) = image_bounds(intr);
    let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&Point) -> f64| pts.iter().map(g).fold(init, f);
    let rect = Rect2::new(
        fold(f64::min, f64::INFINITY, |p| p.x).max(bx0),
        fold(f64::min, f64::INFINITY, |p| p.y).max(by0),
        fold(f64::max, f64::NEG_INFINITY, |p| p.x).min(bx1),
        fold(f64::max, f64::NEG_INFINITY, |p| p.y).min(by1),
    );
    Ok(BoxProjection { corners, rect: (!rect.is_empty()).then_some(rect) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::model::TrackId;
    use crate::bbox::rotation::Quat;
    use crate::geometry::camera::ExtrinsicTransform;
    use proptest::prelude::*;

    fn rig() -> CameraRig {
        CameraRig::coincident(CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap())
    }

    fn cube(center: Vector3<f64>, size: f64, q: Quat) -> Box3D {
        Box3D::new(TrackId(1), "c", 0, center, Vector3::repeat(size), q)
    }

    #[test]
    fn fully_visible_box_is_not_truncated() {
        let b = cube(Vector3::new(0.0, 0.0, 5.0), 1.0, Quat::IDENTITY);
        assert_eq!(compute_truncation(&b, &rig(), CameraKind::Rgb).unwrap(), 0.0);
    }

    #[test]
    fn offscreen_and_rear_boxes_are_fully_truncated() {
        let b = cube(Vector3::new(50.0, 0.0, 5.0), 1.0, Quat::IDENTITY);
        assert_eq!(compute_truncation(&b, &rig(), CameraKind::Rgb).unwrap(), 1.0);
        let b = cube(Vector3::new(0.0, 0.0, -5.0), 1.0, Quat::IDENTITY);
        assert_eq!(compute_truncation(&b, &rig(), CameraKind::Rgb).unwrap(), 1.0);
    }

    #[test]
    fn half_straddling_left_border() {
        // A thin slab facing the camera projects to an exact rectangle. Its 2 m width
        // at 10 m spans 20 px; centered on the left image edge x = -0.5 it is cut in half.
        let z = 10.0;
        let center_x = (-0.5 - 50.0) * z / 100.0;
        let b = Box3D::new(
            TrackId(1),
            "slab",
            0,
            Vector3::new(center_x, 0.0, z),
            Vector3::new(2.0, 2.0, 1e-9),
            Quat::IDENTITY,
        );
        let t = compute_truncation(&b, &rig(), CameraKind::Rgb).unwrap();
        assert!((t - 0.5).abs() < 0.01, "t = {t}");
    }

    #[test]
    fn tiny_boxes_are_degenerate() {
        let b = cube(Vector3::new(0.0, 0.0, 50.0), 1e-3, Quat::IDENTITY);
        assert!(matches!(
            compute_truncation(&b, &rig(), CameraKind::Rgb),
            Err(Error::DegenerateProjection { fallback }) if fallback == 0.0
        ));
        assert_eq!(truncation_or_fallback(&b, &rig(), CameraKind::Rgb).unwrap(), 0.0);
    }

    #[test]
    fn visibility_values() {
        assert_eq!(visibility(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(visibility(1.0, 0.3).unwrap(), 0.0);
        assert_eq!(visibility(0.5, 0.5).unwrap(), 0.25);
        assert!(matches!(visibility(1.2, 0.0), Err(Error::OutOfRange { .. })));
        assert!(visibility(0.0, -0.1).is_err());
    }

    #[test]
    fn difficulty_table() {
        assert_eq!(categorize_difficulty(0.0, 0.0).unwrap(), Difficulty::Easy);
        assert_eq!(categorize_difficulty(0.6, 0.0).unwrap(), Difficulty::Unknown);
        assert_eq!(categorize_difficulty(0.2, 0.4).unwrap(), Difficulty::Moderate);
        assert_eq!(categorize_difficulty(0.4, 0.9).unwrap(), Difficulty::Hard);
        assert!(categorize_difficulty(0.0, 2.0).is_err());
    }

    #[test]
    fn unit_cube_projection_by_hand() {
        let b = cube(Vector3::new(0.0, 0.0, 5.0), 1.0, Quat::IDENTITY);
        let proj = project_box(&b, &rig(), CameraKind::Rgb).unwrap();
        let r = proj.rect.unwrap();
        // Widest extent comes from the near face at z = 4.5: 50 ± 100 * 0.5 / 4.5.
        let half = 100.0 * 0.5 / 4.5;
        assert!((r.x0 - (50.0 - half)).abs() < 1e-12 && (r.x1 - (50.0 + half)).abs() < 1e-12);
        assert!((r.x0 - 40.0).abs() < 1.2 && (r.x1 - 60.0).abs() < 1.2);
        assert!(proj.corners.iter().all(Option::is_some));
    }

    #[test]
    fn rear_box_projection_fails() {
        let b = cube(Vector3::new(0.0, 0.0, -5.0), 1.0, Quat::IDENTITY);
        assert!(matches!(project_box(&b, &rig(), CameraKind::Rgb), Err(Error::AllCornersBehindCamera)));
    }

    #[test]
    fn quarter_turn_of_a_cube_keeps_its_rectangle() {
        let a = cube(Vector3::new(0.3, -0.2, 5.0), 1.0, Quat::IDENTITY);
        let b = cube(Vector3::new(0.3, -0.2, 5.0), 1.0, Quat::from_axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_2));
        let ra = project_box(&a, &rig(), CameraKind::Rgb).unwrap().rect.unwrap();
        let rb = project_box(&b, &rig(), CameraKind::Rgb).unwrap().rect.unwrap();
        for (u, v) in [(ra.x0, rb.x0), (ra.y0, rb.y0), (ra.x1, rb.x1), (ra.y1, rb.y1)] {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn partially_behind_box_is_clipped() {
        let b = cube(Vector3::new(0.0, 0.0, 0.2), 1.0, Quat::IDENTITY);
        let proj = project_box(&b, &rig(), CameraKind::Rgb).unwrap();
        assert_eq!(proj.corners.iter().filter(|c| c.is_none()).count(), 4);
        let r = proj.rect.unwrap();
        assert_eq!((r.x0, r.y0, r.x1, r.y1), (-0.5, -0.5, 99.5, 99.5));
        let t = compute_truncation(&b, &rig(), CameraKind::Rgb).unwrap();
        assert!(t > 0.9);
    }

    #[test]
    fn world_origin_shift_moves_projection() {
        let mut shifted = rig();
        shifted.world_origin = ExtrinsicTransform::from_translation(Vector3::new(0.5, 0.0, 0.0));
        let b = cube(Vector3::new(0.5, 0.0, 5.0), 1.0, Quat::IDENTITY);
        let r0 = project_box(&cube(Vector3::new(0.0, 0.0, 5.0), 1.0, Quat::IDENTITY), &rig(), CameraKind::Rgb)
            .unwrap()
            .rect
            .unwrap();
        let r1 = project_box(&b, &shifted, CameraKind::Rgb).unwrap().rect.unwrap();
        assert!((r0.x0 - r1.x0).abs() < 1e-12 && (r0.x1 - r1.x1).abs() < 1e-12);
    }

    #[test]
    fn clipping_square_half_outside() {
        let sq = vec![
            Point::new(-1.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 2.0),
            Point::new(-1.0, 2.0),
        ];
        let clipped = clip_to_rect(&sq, 0.0, 0.0, 10.0, 10.0);
        assert!((polygon_area(&clipped) - 2.0).abs() < 1e-12);
        assert!(clip_to_rect(&sq, 5.0, 5.0, 10.0, 10.0).is_empty());
    }

    /// Counts lattice pixels whose viewing ray hits the box (slab test), inside and
    /// outside the image. Independent of the hull construction.
    fn raster_truncation(b: &Box3D, intr: &CameraIntrinsics) -> f64 {
        let r = b.rotation();
        let half = b.size / 2.0;
        let hits = |u: f64, v: f64| {
            let dir = Vector3::new((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
            let o = r.transpose() * (-b.center);
            let d = r.transpose() * dir;
            let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
            for k in 0..3 {
                if d[k].abs() < 1e-15 {
                    if o[k].abs() > half[k] {
                        return false;
                    }
                    continue;
                }
                let a = (-half[k] - o[k]) / d[k];
                let c = (half[k] - o[k]) / d[k];
                t0 = t0.max(a.min(c));
                t1 = t1.min(a.max(c));
            }
            t0 <= t1
        };
        let (mut total, mut inside) = (0usize, 0usize);
        for v in -400..500 {
            for u in -400..500 {
                if hits(u as f64, v as f64) {
                    total += 1;
                    if u >= 0 && v >= 0 && u < intr.width as i32 && v < intr.height as i32 {
                        inside += 1;
                    }
                }
            }
        }
        1.0 - inside as f64 / total as f64
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn truncation_agrees_with_rasterization(
            cx in -2.0f64..2.0, cy in -2.0f64..2.0, cz in 6.0f64..9.0,
            sx in 0.8f64..2.0, sy in 0.8f64..2.0, sz in 0.8f64..2.0,
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.2f64..1.0, angle in -3.0f64..3.0,
        ) {
            let b = Box3D::new(
                TrackId(1), "r", 0,
                Vector3::new(cx, cy, cz), Vector3::new(sx, sy, sz),
                Quat::from_axis_angle(Vector3::new(ax, ay, az), angle),
            );
            let rig = rig();
            let t = compute_truncation(&b, &rig, CameraKind::Rgb).unwrap();
            let oracle = raster_truncation(&b, rig.intrinsics(CameraKind::Rgb));
            prop_assert!((t - oracle).abs() < 0.01, "hull {} raster {}", t, oracle);
        }

        #[test]
        fn visibility_is_monotone(t in 0.0f64..1.0, o in 0.0f64..1.0, dt in 0.0f64..1.0, d_o in 0.0f64..1.0) {
            let v = visibility(t, o).unwrap();
            prop_assert!(visibility((t + dt).min(1.0), o).unwrap() <= v);
            prop_assert!(visibility(t, (o + d_o).min(1.0)).unwrap() <= v);
            prop_assert_eq!(v, (1.0 - t) * (1.0 - o));
        }
    }
}
