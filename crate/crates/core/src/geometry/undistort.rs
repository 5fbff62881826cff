//! Pixel-preserving undistortion of RGB images and depth maps.
//!
//! The target camera is chosen so that the all-valid rectangle of the undistorted
//! image keeps one side at the original resolution while the canvas grows to hold
//! every source pixel.

use image::{Rgb, RgbImage};
use nalgebra::Vector2;

use super::camera::{distort_point, undistort_point, CameraIntrinsics, DistortionCoeffs};
use super::depth::DepthMap;
use crate::error::{Error, Result};

/// Samples per image edge used to trace the undistorted border.
pub const BORDER_SAMPLES_PER_EDGE: usize = 256;

/// Axis-aligned rectangle in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelExtent {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl PixelExtent {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalCamera {
    pub intrinsics: CameraIntrinsics,
    /// Ratio of new to old focal lengths.
    pub scale: f64,
    /// The inscribed all-valid rectangle, in the new camera's pixel coordinates.
    pub valid_area: PixelExtent,
}

struct Border {
    left: Vec<Vector2<f64>>,
    right: Vec<Vector2<f64>>,
    top: Vec<Vector2<f64>>,
    bottom: Vec<Vector2<f64>>,
}

impl Border {
    fn all(&self) -> impl Iterator<Item = &Vector2<f64>> {
        self.left.iter().chain(&self.right).chain(&self.top).chain(&self.bottom)
    }
}

/// Undistorted normalized coordinates of points along the image's outer edges.
fn trace_border(intr: &CameraIntrinsics, d: &DistortionCoeffs, samples: usize) -> Result<Border> {
    let (x_lo, x_hi) = (-0.5, intr.width as f64 - 0.5);
    let (y_lo, y_hi) = (-0.5, intr.height as f64 - 0.5);
    let lerp = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (samples - 1) as f64;
    let ideal = |x: f64, y: f64| undistort_point(intr.normalize(Vector2::new(x, y)), d);
    let mut border =
        Border { left: Vec::new(), right: Vec::new(), top: Vec::new(), bottom: Vec::new() };
    for i in 0..samples {
        let x = lerp(x_lo, x_hi, i);
        let y = lerp(y_lo, y_hi, i);
        border.top.push(ideal(x, y_lo)?);
        border.bottom.push(ideal(x, y_hi)?);
        border.left.push(ideal(x_lo, y)?);
        border.right.push(ideal(x_hi, y)?);
    }
    Ok(border)
}

/// Finds the camera matrix that keeps as many source pixels as possible.
///
/// The focal lengths are scaled uniformly so that the limiting side of the inscribed
/// valid rectangle equals the original width or height; the canvas is enlarged to the
/// bounding box of the undistorted border so no source pixel falls off the image.
pub fn compute_optimal_camera_matrix(
    intr: &CameraIntrinsics,
    d: &DistortionCoeffs,
) -> Result<OptimalCamera> {
    intr.validate()?;
    if d.is_zero() {
        return Ok(OptimalCamera {
            intrinsics: *intr,
            scale: 1.0,
            valid_area: PixelExtent {
                x0: -0.5,
                y0: -0.5,
                x1: intr.width as f64 - 0.5,
                y1: intr.height as f64 - 0.5,
            },
        });
    }
    let border = trace_border(intr, d, BORDER_SAMPLES_PER_EDGE)?;
    let max_by = |pts: &[Vector2<f64>], f: fn(&Vector2<f64>) -> f64| {
        pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    };
    let min_by = |pts: &[Vector2<f64>], f: fn(&Vector2<f64>) -> f64| {
        pts.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    let inner_x0 = max_by(&border.left, |p| p.x);
    let inner_x1 = min_by(&border.right, |p| p.x);
    let inner_y0 = max_by(&border.top, |p| p.y);
    let inner_y1 = min_by(&border.bottom, |p| p.y);
    if !(inner_x1 > inner_x0 && inner_y1 > inner_y0) {
        return Err(Error::DegenerateDistortion);
    }
    let (mut outer_x0, mut outer_y0) = (f64::INFINITY, f64::INFINITY);
    let (mut outer_x1, mut outer_y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in border.all() {
        outer_x0 = outer_x0.min(p.x);
        outer_x1 = outer_x1.max(p.x);
        outer_y0 = outer_y0.min(p.y);
        outer_y1 = outer_y1.max(p.y);
    }

    let scale = (intr.width as f64 / (intr.fx * (inner_x1 - inner_x0)))
        .min(intr.height as f64 / (intr.fy * (inner_y1 - inner_y0)));
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::DegenerateDistortion);
    }
    let fx = scale * intr.fx;
    let fy = scale * intr.fy;
    // Shift the principal point by whole pixels only, so it keeps the original
    // sub-pixel phase and the optical axis stays on the same pixel lattice.
    let cx = intr.cx + (-fx * outer_x0 - 0.5 - intr.cx - 1e-9).ceil();
    let cy = intr.cy + (-fy * outer_y0 - 0.5 - intr.cy - 1e-9).ceil();
    let width = (cx + fx * outer_x1 + 0.5 - 1e-6).ceil().max(1.0) as u32;
    let height = (cy + fy * outer_y1 + 0.5 - 1e-6).ceil().max(1.0) as u32;
    let intrinsics = CameraIntrinsics::new(fx, fy, cx, cy, width, height)
        .map_err(|_| Error::DegenerateDistortion)?;
    let to_px = |x: f64, y: f64| intrinsics.denormalize(Vector2::new(x, y));
    let lo = to_px(inner_x0, inner_y0);
    let hi = to_px(inner_x1, inner_y1);
    Ok(OptimalCamera {
        intrinsics,
        scale,
        valid_area: PixelExtent { x0: lo.x, y0: lo.y, x1: hi.x, y1: hi.y },
    })
}

fn sample_bilinear(image: &RgbImage, x: f64, y: f64) -> Option<[f64; 3]> {
    let (w, h) = (image.width() as f64, image.height() as f64);
    if !(x >= -0.5 && y >= -0.5 && x <= w - 0.5 && y <= h - 0.5) {
        return None;
    }
    let x = x.clamp(0.0, w - 1.0);
    let y = y.clamp(0.0, h - 1.0);
    let (x0, y0) = (x.floor() as u32, y.floor() as u32);
    let x1 = (x0 + 1).min(image.width() - 1);
    let y1 = (y0 + 1).min(image.height() - 1);
    let (ax, ay) = (x - x0 as f64, y - y0 as f64);
    let px = |xx: u32, yy: u32| image.get_pixel(xx, yy).0;
    let (p00, p10, p01, p11) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - ax) + p10[c] as f64 * ax;
        let bottom = p01[c] as f64 * (1.0 - ax) + p11[c] as f64 * ax;
        out[c] = top * (1.0 - ay) + bottom * ay;
    }
    Some(out)
}

/// Remaps an RGB image into `new_intr` by inverse mapping with bilinear sampling.
///
/// Output pixels whose source lies off the raw image are black.
pub fn undistort_rgb(
    image: &RgbImage,
    intr: &CameraIntrinsics,
    d: &DistortionCoeffs,
    new_intr: &CameraIntrinsics,
) -> Result<RgbImage> {
    let dims = (image.width() as usize, image.height() as usize);
    if dims != intr.dims() {
        return Err(Error::DimensionMismatch { expected: intr.dims(), actual: dims });
    }
    let mut out = RgbImage::new(new_intr.width, new_intr.height);
    for (u, v, pixel) in out.enumerate_pixels_mut() {
        let ideal = new_intr.normalize(Vector2::new(u as f64, v as f64));
        let src = intr.denormalize(distort_point(ideal, d));
        if let Some(rgb) = sample_bilinear(image, src.x, src.y) {
            *pixel = Rgb(rgb.map(|c| c.round().clamp(0.0, 255.0) as u8));
        }
    }
    Ok(out)
}

/// Writes `value` unless the target already holds a nearer measurement.
fn splat_nearest(map: &mut DepthMap, row: usize, col: usize, value: u16) {
    let current = map.get(row, col);
    if current == 0 || value < current {
        map.set(row, col, value);
    }
}

/// Forward-scatters every valid depth pixel to its undistorted location.
pub fn undistort_depth(
    depth: &DepthMap,
    intr: &CameraIntrinsics,
    d: &DistortionCoeffs,
) -> Result<(DepthMap, CameraIntrinsics)> {
    depth.check_dims(intr)?;
    let new_intr = compute_optimal_camera_matrix(intr, d)?.intrinsics;
    let mut out = DepthMap::zeros(new_intr.width as usize, new_intr.height as usize);
    for row in 0..depth.height() {
        for col in 0..depth.width() {
            let value = depth.get(row, col);
            if value == 0 {
                continue;
            }
            let ideal = undistort_point(intr.normalize(Vector2::new(col as f64, row as f64)), d)?;
            let target = new_intr.denormalize(ideal);
            let (tc, tr) = (target.x.round(), target.y.round());
            if tc >= 0.0 && tr >= 0.0 && tc < out.width() as f64 && tr < out.height() as f64 {
                splat_nearest(&mut out, tr as usize, tc as usize, value);
            }
        }
    }
    Ok((out, new_intr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vga() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 319.5, 239.5, 640, 480).unwrap()
    }

    #[test]
    fn zero_distortion_keeps_intrinsics() {
        let out = compute_optimal_camera_matrix(&vga(), &DistortionCoeffs::default()).unwrap();
        assert_eq!(out.intrinsics, vga());
        assert_eq!(out.scale, 1.0);
    }

    #[test]
    fn pincushion_enlarges_canvas() {
        let out = compute_optimal_camera_matrix(&vga(), &DistortionCoeffs::radial(0.2, 0.0, 0.0)).unwrap();
        assert!(out.scale > 1.0);
        assert!(out.intrinsics.width > 640 && out.intrinsics.height > 480);
    }

    #[test]
    fn limiting_side_matches_original_resolution() {
        for k1 in [-0.2, 0.2] {
            let out = compute_optimal_camera_matrix(&vga(), &DistortionCoeffs::radial(k1, 0.0, 0.0)).unwrap();
            let (w, h) = (out.valid_area.width(), out.valid_area.height());
            assert!((w - 640.0).abs() < 1e-6 || (h - 480.0).abs() < 1e-6, "k1={k1}: {w}x{h}");
            assert!(w <= 640.0 + 1e-6 && h <= 480.0 + 1e-6);
        }
    }

    #[test]
    fn collapsing_distortion_is_rejected() {
        let err = compute_optimal_camera_matrix(&vga(), &DistortionCoeffs::radial(-10.0, 0.0, 0.0));
        assert!(err.is_err());
    }

    #[test]
    fn zero_distortion_rgb_is_byte_identical() {
        let intr = CameraIntrinsics::new(40.0, 42.0, 15.5, 11.0, 31, 23).unwrap();
        let img = RgbImage::from_fn(31, 23, |x, y| Rgb([(x * 7) as u8, (y * 11) as u8, ((x * y) % 256) as u8]));
        let out = undistort_rgb(&img, &intr, &DistortionCoeffs::default(), &intr).unwrap();
        assert_eq!(out.as_raw(), img.as_raw());
    }

    #[test]
    fn principal_point_pixel_stays_at_principal_point() {
        let intr = CameraIntrinsics::new(60.0, 60.0, 40.0, 30.0, 81, 61).unwrap();
        let mut img = RgbImage::new(81, 61);
        img.put_pixel(40, 30, Rgb([255, 255, 255]));
        for k1 in [-0.2, 0.15] {
            let d = DistortionCoeffs::radial(k1, 0.05, 0.0);
            let new = compute_optimal_camera_matrix(&intr, &d).unwrap().intrinsics;
            let out = undistort_rgb(&img, &intr, &d, &new).unwrap();
            let (u, v) = (new.cx.round() as u32, new.cy.round() as u32);
            assert!((new.cx - new.cx.round()).abs() < 1e-9, "principal point lands on a pixel center");
            assert_eq!(out.get_pixel(u, v).0, [255, 255, 255], "k1={k1}");
        }
    }

    #[test]
    fn depth_scatter_keeps_nearest() {
        let mut map = DepthMap::zeros(2, 1);
        splat_nearest(&mut map, 0, 0, 800);
        splat_nearest(&mut map, 0, 0, 500);
        splat_nearest(&mut map, 0, 1, 500);
        splat_nearest(&mut map, 0, 1, 800);
        assert_eq!(map.values(), &[500, 500]);
    }

    #[test]
    fn zero_distortion_depth_is_identity() {
        let intr = CameraIntrinsics::new(50.0, 50.0, 20.0, 10.0, 40, 20).unwrap();
        let values = (0..800).map(|i| (i * 13 % 4000) as u16).collect();
        let depth = DepthMap::new(40, 20, values).unwrap();
        let (out, new) = undistort_depth(&depth, &intr, &DistortionCoeffs::default()).unwrap();
        assert_eq!(out, depth);
        assert_eq!(new, intr);
    }

    #[test]
    fn depth_dimension_mismatch() {
        let err = undistort_depth(&DepthMap::zeros(3, 3), &vga(), &DistortionCoeffs::default());
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
