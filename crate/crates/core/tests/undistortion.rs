use std::collections::BTreeSet;

use image::{GrayImage, Luma, Rgb, RgbImage};
use nalgebra::{Matrix2, Vector2};
use rgbd_annotate::geometry::{
    compute_optimal_camera_matrix, undistort_depth, undistort_rgb, CameraIntrinsics, DepthMap, DistortionCoeffs,
};

fn vga() -> CameraIntrinsics {
    CameraIntrinsics::new(525.0, 525.0, 319.5, 239.5, 640, 480).unwrap()
}

/// Radial-only inverse distortion by bisection along the ray.
fn undistort_bisect(p: Vector2<f64>, k1: f64) -> Vector2<f64> {
    let rd = p.norm();
    if rd == 0.0 {
        return p;
    }
    let f = |r: f64| r * (1.0 + k1 * r * r);
    let (mut lo, mut hi) = (0.0, if k1 < 0.0 { (1.0 / (-3.0 * k1)).sqrt() } else { rd });
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < rd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    p * (0.5 * (lo + hi) / rd)
}

const CELL: f64 = 0.1;

/// Checkerboard on the ideal image plane, rendered through radial distortion with
/// 4×4 supersampling.
fn distorted_checkerboard(intr: &CameraIntrinsics, k1: f64) -> RgbImage {
    RgbImage::from_fn(intr.width, intr.height, |u, v| {
        let mut white = 0;
        for sy in 0..4 {
            for sx in 0..4 {
                let px = Vector2::new(u as f64 - 0.375 + sx as f64 * 0.25, v as f64 - 0.375 + sy as f64 * 0.25);
                let p = undistort_bisect(intr.normalize(px), k1);
                white += ((p.x / CELL).floor() + (p.y / CELL).floor()).rem_euclid(2.0) as u32;
            }
        }
        let g = (white * 255 / 16) as u8;
        Rgb([g, g, g])
    })
}

fn gray(img: &RgbImage) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| Luma([img.get_pixel(x, y)[0]]))
}

/// Saddle response: opposite diagonal quadrants agree, adjacent ones differ.
fn saddle(g: &GrayImage, x: i64, y: i64) -> f64 {
    let at = |dx: i64, dy: i64| g.get_pixel((x + dx) as u32, (y + dy) as u32)[0] as f64;
    let mut r = 0.0;
    for d in 1..=3 {
        r += at(-d, -d) + at(d, d) - at(d, -d) - at(-d, d);
    }
    r.abs()
}

/// Strongest saddle near `guess`, refined to subpixel by a response-weighted centroid.
fn detect_corner(g: &GrayImage, guess: Vector2<f64>) -> Vector2<f64> {
    let (gx, gy) = (guess.x.round() as i64, guess.y.round() as i64);
    let mut best = (gx, gy, -1.0);
    for y in gy - 4..=gy + 4 {
        for x in gx - 4..=gx + 4 {
            let r = saddle(g, x, y);
            if r > best.2 {
                best = (x, y, r);
            }
        }
    }
    let (mut sum, mut wsum) = (Vector2::zeros(), 0.0);
    for y in best.1 - 1..=best.1 + 1 {
        for x in best.0 - 1..=best.0 + 1 {
            let w = saddle(g, x, y);
            sum += Vector2::new(x as f64, y as f64) * w;
            wsum += w;
        }
    }
    sum / wsum
}

/// Maximum perpendicular distance to the total-least-squares line.
fn line_residual(points: &[Vector2<f64>]) -> f64 {
    let mean = points.iter().sum::<Vector2<f64>>() / points.len() as f64;
    let cov = points.iter().fold(Matrix2::zeros(), |acc, p| acc + (p - mean) * (p - mean).transpose());
    let eig = cov.symmetric_eigen();
    let k = if eig.eigenvalues[0] < eig.eigenvalues[1] { 0 } else { 1 };
    let normal = eig.eigenvectors.column(k).into_owned();
    points.iter().map(|p| (p - mean).dot(&normal).abs()).fold(0.0, f64::max)
}

#[test]
fn barrel_checkerboard_lines_come_out_straight() {
    let (intr, k1) = (vga(), -0.2);
    let d = DistortionCoeffs::radial(k1, 0.0, 0.0);
    let raw = distorted_checkerboard(&intr, k1);
    let opt = compute_optimal_camera_matrix(&intr, &d).unwrap();
    let out = gray(&undistort_rgb(&raw, &intr, &d, &opt.intrinsics).unwrap());
    let valid = opt.valid_area;
    let corner = |i: i32, j: i32| opt.intrinsics.denormalize(Vector2::new(i as f64 * CELL, j as f64 * CELL));
    let inside = |p: Vector2<f64>| p.x > valid.x0 + 8.0 && p.x < valid.x1 - 8.0 && p.y > valid.y0 + 8.0 && p.y < valid.y1 - 8.0;

    let mut worst: f64 = 0.0;
    let mut lines = 0;
    for j in -6..=6 {
        let row: Vec<_> = (-8..=8).map(|i| corner(i, j)).filter(|&p| inside(p)).map(|p| detect_corner(&out, p)).collect();
        let col: Vec<_> = (-8..=8).map(|i| corner(j, i)).filter(|&p| inside(p)).map(|p| detect_corner(&out, p)).collect();
        for pts in [row, col] {
            if pts.len() >= 4 {
                worst = worst.max(line_residual(&pts));
                lines += 1;
            }
        }
    }
    assert!(lines >= 10, "only {lines} lines measured");
    assert!(worst < 0.5, "max line residual {worst} px");

    // The raw image is visibly curved along the same lines.
    let raw_gray = gray(&raw);
    let raw_corner = |i: i32, j: i32| {
        let ideal = Vector2::new(i as f64 * CELL, j as f64 * CELL);
        let r2 = ideal.norm_squared();
        intr.denormalize(ideal * (1.0 + k1 * r2))
    };
    let top: Vec<_> = (-5..=5).map(|i| detect_corner(&raw_gray, raw_corner(i, -4))).collect();
    assert!(line_residual(&top) > 2.0);
}

#[test]
fn principal_pixel_stays_at_principal_point() {
    let intr = vga();
    let d = DistortionCoeffs::radial(-0.15, 0.02, 0.0);
    let mut img = RgbImage::new(640, 480);
    img.put_pixel(319, 239, Rgb([255, 255, 255]));
    let intr = CameraIntrinsics::new(intr.fx, intr.fy, 319.0, 239.0, 640, 480).unwrap();
    let opt = compute_optimal_camera_matrix(&intr, &d).unwrap();
    let out = undistort_rgb(&img, &intr, &d, &opt.intrinsics).unwrap();
    let (cx, cy) = (opt.intrinsics.cx, opt.intrinsics.cy);
    assert_eq!(cx.fract(), 0.0);
    assert_eq!(out.get_pixel(cx as u32, cy as u32).0, [255, 255, 255]);
}

#[test]
fn uniform_plane_depth_count_matches_forward_mapping() {
    let intr = vga();
    let k1 = -0.1;
    let d = DistortionCoeffs::radial(k1, 0.0, 0.0);
    let depth = DepthMap::filled(640, 480, 1000);
    let (out, new_intr) = undistort_depth(&depth, &intr, &d).unwrap();
    let mut targets = BTreeSet::new();
    for row in 0..480 {
        for col in 0..640 {
            let ideal = undistort_bisect(intr.normalize(Vector2::new(col as f64, row as f64)), k1);
            let t = new_intr.denormalize(ideal);
            let (x, y) = (t.x.round(), t.y.round());
            if x >= 0.0 && y >= 0.0 && x < new_intr.width as f64 && y < new_intr.height as f64 {
                targets.insert((y as i64, x as i64));
            }
        }
    }
    let nonzero: Vec<u16> = out.values().iter().copied().filter(|&v| v != 0).collect();
    assert!(nonzero.iter().all(|&v| v == 1000));
    assert!(nonzero.len() <= depth.valid_count());
    let diff = (nonzero.len() as i64 - targets.len() as i64).abs();
    assert!(diff <= 2, "engine hit {} targets, oracle {}", nonzero.len(), targets.len());
}
