use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::Vector3;
use serde_json::Value;

use rgbd_annotate::bbox::{Box3D, BoxTrack, Quat, TrackId};
use rgbd_annotate::geometry::{CameraIntrinsics, CameraRig, DepthMap};
use rgbd_annotate::project::{AnnotationProject, FrameEntry, WriterLock};

const BIN: &str = env!("CARGO_BIN_EXE_rgbd-annotate");

fn chair(frame: u32, x: f64) -> Box3D {
    Box3D::new(TrackId(1), "chair", frame, Vector3::new(x, 0.0, 3.0), Vector3::new(0.5, 0.5, 0.5), Quat::IDENTITY)
}

/// Eleven 64×48 frames and one track keyed at frames 0 and 10.
fn fixture(root: &Path) -> AnnotationProject {
    fixture_with(root, 11, [chair(0, 0.0), chair(10, 1.0)])
}

fn fixture_with(root: &Path, n: usize, keyframes: impl IntoIterator<Item = Box3D>) -> AnnotationProject {
    let intr = CameraIntrinsics::new(60.0, 60.0, 31.5, 23.5, 64, 48).unwrap();
    std::fs::create_dir_all(root.join("frames/rgb")).unwrap();
    std::fs::create_dir_all(root.join("frames/depth")).unwrap();
    let frames = (0..n)
        .map(|i| {
            let rgb = PathBuf::from(format!("frames/rgb/{i:06}.png"));
            let depth = PathBuf::from(format!("frames/depth/{i:06}.png"));
            image::RgbImage::from_pixel(64, 48, image::Rgb([90, 90, i as u8])).save(root.join(&rgb)).unwrap();
            DepthMap::filled(64, 48, 2000).save_png(&root.join(&depth)).unwrap();
            FrameEntry { rgb, depth }
        })
        .collect();
    let mut p = AnnotationProject::new(root, frames, CameraRig::coincident(intr));
    p.tracks.insert(TrackId(1), BoxTrack::from_keyframes(TrackId(1), "chair", keyframes).unwrap());
    p.save().unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The single JSON line written on failure.
fn error_of(out: &Output) -> Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    serde_json::from_str(lines[0]).unwrap()
}

#[test]
fn interpolate_writes_one_row_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let out = run(&["interpolate", "--project", arg(dir.path()), "--mode", "linear"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("export/boxes.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert!(rows[5].starts_with("5,1,chair,0,0.5,"), "{}", rows[5]);
}

#[test]
fn usage_errors_are_fatal_json() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let out = run(&["interpolate", "--project", arg(dir.path()), "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"], "Usage");
    assert!(!dir.path().join("export").exists());

    let out = run(&["interpolate", "--project", arg(dir.path()), "--mode", "quintic"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"], "InvalidInput");

    assert!(run(&["--help"]).status.success());
}

#[test]
fn io_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["export", "--project", arg(&dir.path().join("nowhere")), "--format", "flat_per_frame"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_of(&out)["message"].as_str().is_some());

    fixture(dir.path());
    let _held = WriterLock::acquire(dir.path()).unwrap();
    let out = run(&["export", "--project", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["error"], "WriterLockHeld");
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    assert!(run(&["export", "--project", arg(dir.path()), "--format", "flat_per_frame"]).status.success());
    assert!(dir.path().join("export/boxes.csv").is_file());

    let out = run(&["export", "--project", arg(dir.path()), "--format", "masks_png"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"], "NothingToExport");

    let out = run(&["export", "--project", arg(dir.path()), "--format", "xml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluate_against_json_truth() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path());
    let truth = dir.path().join("truth.json");
    std::fs::write(&truth, serde_json::to_string(&p.annotation_set().unwrap()).unwrap()).unwrap();
    let report = dir.path().join("report.txt");

    let out = run(&["evaluate", "--user", arg(dir.path()), "--truth", arg(&truth), "--out", arg(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&report).unwrap().contains("ATE"));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["boxes"]["ate"], 0.0);
    assert_eq!(json["boxes"]["matched"], 11);

    std::fs::write(&truth, "{ not json").unwrap();
    let out = run(&["evaluate", "--user", arg(dir.path()), "--truth", arg(&truth), "--out", arg(&report)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"], "InvalidDocument");
}

#[test]
fn compare_interp_prints_all_modes() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path());
    let mut set = p.annotation_set().unwrap();
    for b in &mut set.boxes {
        b.center.y = 0.01 * (b.frame_index as f64).powi(2);
    }
    let truth = dir.path().join("dense.json");
    std::fs::write(&truth, serde_json::to_string(&set).unwrap()).unwrap();
    let out = run(&["compare-interp", "--project", arg(dir.path()), "--truth", arg(&truth)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for mode in ["linear", "cubic", "hybrid"] {
        assert!(text.contains(mode), "{text}");
    }
}

#[test]
fn undistort_only_switches_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let manifest = std::fs::read(dir.path().join("project.json")).unwrap();

    assert!(run(&["undistort", "--project", arg(dir.path())]).status.success());
    assert!(dir.path().join("frames_undistorted/rgb/000000.png").is_file());
    assert_eq!(std::fs::read(dir.path().join("project.json")).unwrap(), manifest);

    assert!(run(&["undistort", "--project", arg(dir.path()), "--write-calib"]).status.success());
    let p = AnnotationProject::load(dir.path()).unwrap();
    assert!(p.undistorted);

    let again = run(&["undistort", "--project", arg(dir.path())]);
    assert_eq!(again.status.code(), Some(1));
}

fn ate_of(report: &str, mode: &str) -> f64 {
    let line = report.lines().find(|l| l.starts_with(mode)).unwrap();
    line.split_whitespace().nth(2).unwrap().parse().unwrap()
}

#[test]
fn compare_interp_on_a_cubic_trajectory_favors_hybrid_over_linear() {
    let x = |f: u32| {
        let t = f as f64 / 25.0;
        2.0 * t * t * t - 1.5 * t * t + 1.2 * t
    };
    let dir = tempfile::tempdir().unwrap();
    let p = fixture_with(dir.path(), 26, (0..=25).step_by(5).map(|f| chair(f, x(f))));
    let mut set = p.annotation_set().unwrap();
    for b in &mut set.boxes {
        b.center.x = x(b.frame_index);
    }
    let truth = dir.path().join("dense.json");
    std::fs::write(&truth, serde_json::to_string(&set).unwrap()).unwrap();
    let out = run(&["compare-interp", "--project", arg(dir.path()), "--truth", arg(&truth)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let (hybrid, linear) = (ate_of(&text, "hybrid"), ate_of(&text, "linear"));
    assert!(hybrid < linear, "{text}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path());
    let truth = dir.path().join("truth.json");
    std::fs::write(&truth, serde_json::to_string(&p.annotation_set().unwrap()).unwrap()).unwrap();
    let csv = dir.path().join("export/boxes.csv");
    let report = dir.path().join("report.txt");

    let mut seen = Vec::new();
    for _ in 0..2 {
        assert!(run(&["interpolate", "--project", arg(dir.path())]).status.success());
        assert!(run(&["evaluate", "--user", arg(dir.path()), "--truth", arg(&truth), "--out", arg(&report)]).status.success());
        seen.push([csv.clone(), report.clone(), dir.path().join("report.json")].map(|f| std::fs::read(f).unwrap()));
    }
    assert_eq!(seen[0], seen[1]);
}
