//! Deterministic exports and frame undistortion for a loaded project.

use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::io::{png_bytes, write_atomic, write_document};
use super::store::{AnnotationProject, FrameEntry, CALIBRATION_FILE};
use crate::bbox::interpolate::InterpolationOptions;
use crate::bbox::visibility::{categorize_difficulty, truncation_or_fallback, visibility};
use crate::error::{Error, Result};
use crate::geometry::rig::{CameraKind, CameraModel, CameraRig};
use crate::geometry::undistort::{compute_optimal_camera_matrix, undistort_depth, undistort_rgb};
use crate::segmentation::mask::Modality;

pub const EXPORT_DIR: &str = "export";
pub const UNDISTORTED_DIR: &str = "frames_undistorted";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    /// `export/boxes.csv`, one row per interpolated box.
    FlatPerFrame,
    /// `export/masks/{rgb,depth}/{frame:06}.png`, 16-bit instance-id images.
    MasksPng,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat_per_frame" => Ok(Self::FlatPerFrame),
            "masks_png" => Ok(Self::MasksPng),
            other => Err(Error::InvalidInput(format!("unknown export format {other:?}"))),
        }
    }
}

const BOX_HEADER: [&str; 20] = [
    "frame", "track_id", "class_label", "keyframe", "cx", "cy", "cz", "sx", "sy", "sz", "qw", "qx", "qy", "qz",
    "t_rgb", "t_depth", "t", "o", "v", "difficulty",
];

/// Writes the box table with the given interpolation options; returns its path.
pub fn export_boxes(project: &AnnotationProject, options: &InterpolationOptions) -> Result<PathBuf> {
    let boxes = project.interpolated_boxes(options)?;
    if boxes.is_empty() {
        return Err(Error::NothingToExport);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(BOX_HEADER).map_err(csv_err)?;
    for b in &boxes {
        let t_rgb = truncation_or_fallback(b, &project.rig, CameraKind::Rgb)?;
        let t_depth = truncation_or_fallback(b, &project.rig, CameraKind::Depth)?;
        let t = t_rgb.max(t_depth);
        let v = visibility(t, b.occlusion)?;
        let difficulty = categorize_difficulty(t, b.occlusion)?;
        let q = b.orientation;
        let mut row = vec![
            b.frame_index.to_string(),
            b.track_id.to_string(),
            b.class_label.clone(),
            u8::from(b.is_keyframe).to_string(),
        ];
        row.extend(b.center.iter().chain(b.size.iter()).chain([q.w, q.x, q.y, q.z].iter()).map(|v| v.to_string()));
        row.extend([t_rgb, t_depth, t, b.occlusion, v].iter().map(|v| v.to_string()));
        row.push(difficulty.as_str().to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let path = project.root.join(EXPORT_DIR).join("boxes.csv");
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// Writes one instance-id image per (frame, modality) holding masks; a pixel
/// claimed by several instances keeps the highest id. Returns the written paths.
pub fn export_masks(project: &AnnotationProject) -> Result<Vec<PathBuf>> {
    if project.masks.is_empty() {
        return Err(Error::NothingToExport);
    }
    let mut written = Vec::new();
    for (frame, _) in project.frames.iter().enumerate() {
        for modality in [Modality::Rgb, Modality::Depth] {
            let masks: Vec<_> = project.masks.frame(frame as u32, modality).collect();
            let Some(first) = masks.first() else { continue };
            let (w, h) = first.mask.dims();
            let mut img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::new(w as u32, h as u32);
            for m in &masks {
                let id = u16::try_from(m.instance_id)
                    .map_err(|_| Error::InvalidInput(format!("instance id {} exceeds 16 bits", m.instance_id)))?;
                m.mask.check_same_dims(&first.mask)?;
                for (x, y, p) in img.enumerate_pixels_mut() {
                    if m.mask.get(y as usize, x as usize) {
                        p[0] = id;
                    }
                }
            }
            let path = project
                .root
                .join(EXPORT_DIR)
                .join("masks")
                .join(modality.as_str())
                .join(format!("{frame:06}.png"));
            write_atomic(&path, &png_bytes(&img)?)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn export_annotations(project: &AnnotationProject, format: ExportFormat) -> Result<Vec<PathBuf>> {
    match format {
        ExportFormat::FlatPerFrame => Ok(vec![export_boxes(project, &InterpolationOptions::hybrid(project.config.epsilon))?]),
        ExportFormat::MasksPng => export_masks(project),
    }
}

/// Undistorted manifest and the matching distortion-free rig.
#[derive(Debug, Clone, PartialEq)]
pub struct UndistortedFrames {
    pub frames: Vec<FrameEntry>,
    pub rig: CameraRig,
}

/// Writes undistorted copies of every frame under `frames_undistorted/` together with
/// a calibration document for them. The project itself is left untouched.
pub fn undistort_frames(project: &AnnotationProject) -> Result<UndistortedFrames> {
    if project.undistorted {
        return Err(Error::InvalidInput("project frames are already undistorted".into()));
    }
    let (rgb, depth) = (&project.rig.rgb, &project.rig.depth);
    let rgb_intr = compute_optimal_camera_matrix(&rgb.intrinsics, &rgb.distortion)?.intrinsics;
    let mut depth_intr = depth.intrinsics;
    let out = project.root.join(UNDISTORTED_DIR);
    for sub in ["rgb", "depth"] {
        fs::create_dir_all(out.join(sub))?;
    }
    let mut frames = Vec::with_capacity(project.frames.len());
    for i in 0..project.frames.len() {
        let img = undistort_rgb(&project.load_rgb(i)?, &rgb.intrinsics, &rgb.distortion, &rgb_intr)?;
        let (d, intr) = undistort_depth(&project.load_depth(i)?, &depth.intrinsics, &depth.distortion)?;
        depth_intr = intr;
        let entry = FrameEntry {
            rgb: PathBuf::from(UNDISTORTED_DIR).join("rgb").join(format!("{i:06}.png")),
            depth: PathBuf::from(UNDISTORTED_DIR).join("depth").join(format!("{i:06}.png")),
        };
        write_atomic(&project.root.join(&entry.rgb), &png_bytes(&img)?)?;
        write_atomic(&project.root.join(&entry.depth), &png_bytes(&d.to_image())?)?;
        frames.push(entry);
    }
    if project.frames.is_empty() {
        depth_intr = compute_optimal_camera_matrix(&depth.intrinsics, &depth.distortion)?.intrinsics;
    }
    let rig = CameraRig { rgb: CameraModel::pinhole(rgb_intr), depth: CameraModel::pinhole(depth_intr), ..project.rig };
    #[derive(Serialize)]
    struct Doc<'a> {
        rig: &'a CameraRig,
    }
    write_document(&out.join(CALIBRATION_FILE), &Doc { rig: &rig })?;
    Ok(UndistortedFrames { frames, rig })
}

impl AnnotationProject {
    /// Points the project at undistorted frames; call [`AnnotationProject::save`] to persist.
    pub fn adopt_undistorted(&mut self, u: UndistortedFrames) {
        self.frames = u.frames;
        self.rig = u.rig;
        self.undistorted = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::model::{BoxTrack, TrackId};
    use crate::geometry::camera::DistortionCoeffs;
    use crate::project::store::tests::{fixture, unit_box};
    use crate::project::store::AnnotationProject;
    use crate::segmentation::mask::{BinaryMask, InstanceMask};

    #[test]
    fn two_keyframe_track_exports_every_frame() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = fixture(dir.path(), 11);
        p.tracks.insert(
            TrackId(1),
            BoxTrack::from_keyframes(TrackId(1), "chair", [unit_box(1, 0, -0.2), unit_box(1, 10, 0.2)]).unwrap(),
        );
        let path = export_annotations(&p, ExportFormat::FlatPerFrame).unwrap().remove(0);
        let first = fs::read(&path).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.lines().next().unwrap().starts_with("frame,track_id"));
        export_annotations(&p, ExportFormat::FlatPerFrame).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn empty_project_has_nothing_to_export() {
        let dir = tempfile::tempdir().unwrap();
        let p = fixture(dir.path(), 1);
        assert!(matches!(export_annotations(&p, ExportFormat::FlatPerFrame), Err(Error::NothingToExport)));
        assert!(matches!(export_annotations(&p, ExportFormat::MasksPng), Err(Error::NothingToExport)));
    }

    #[test]
    fn overlapping_masks_keep_highest_id() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = fixture(dir.path(), 1);
        for (id, c0) in [(3, 0), (9, 10)] {
            p.masks
                .insert(InstanceMask {
                    instance_id: id,
                    frame_index: 0,
                    modality: Modality::Rgb,
                    mask: BinaryMask::from_fn(64, 48, |_, c| c >= c0 && c < c0 + 20),
                })
                .unwrap();
        }
        let path = export_annotations(&p, ExportFormat::MasksPng).unwrap().remove(0);
        let img = image::open(&path).unwrap().to_luma16();
        assert_eq!([img.get_pixel(5, 5)[0], img.get_pixel(15, 5)[0], img.get_pixel(25, 5)[0], img.get_pixel(40, 5)[0]], [3, 9, 9, 0]);
    }

    #[test]
    fn undistortion_writes_frames_and_pinhole_rig() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = fixture(dir.path(), 2);
        p.rig.rgb.distortion = DistortionCoeffs::radial(-0.1, 0.0, 0.0);
        p.rig.depth.distortion = DistortionCoeffs::radial(-0.1, 0.0, 0.0);
        let u = undistort_frames(&p).unwrap();
        assert!(u.rig.rgb.distortion.is_zero() && u.rig.depth.distortion.is_zero());
        p.adopt_undistorted(u);
        p.save().unwrap();
        let back = AnnotationProject::load(dir.path()).unwrap();
        assert!(back.undistorted);
        assert!(matches!(undistort_frames(&back), Err(Error::InvalidInput(_))));
    }
}
