//! The on-disk project: manifest, calibration, annotations, masks and config.
//!
//! ```text
//! root/
//!   project.json        frame manifest and undistortion state
//!   calibration.json    camera rig
//!   annotations.json    box tracks (keyframes only)
//!   config.json         optional tuning, defaults when absent
//!   masks/{rgb,depth}/{frame:06}/{instance}.png
//!   frames/...          imagery referenced by the manifest
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma, RgbImage};
use serde::{Deserialize, Serialize};

use super::io::{load_gray, png_bytes, read_document, write_atomic, write_document, WriterLock};
use crate::bbox::interpolate::{interpolate_track_with, InterpolationOptions, DEFAULT_EPSILON};
use crate::bbox::model::{Box3D, BoxTrack, TrackId};
use crate::error::{Error, Result};
use crate::geometry::camera::ExtrinsicTransform;
use crate::geometry::depth::DepthMap;
use crate::geometry::rig::{CameraKind, CameraRig};
use crate::metrics::AnnotationSet;
use crate::segmentation::grabcut::GrabCutParams;
use crate::segmentation::mask::{BinaryMask, InstanceMask, MaskSet, Modality};

pub const PROJECT_FILE: &str = "project.json";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const CONFIG_FILE: &str = "config.json";
pub const MASK_DIR: &str = "masks";

/// One RGB/depth pair, paths relative to the project root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub rgb: PathBuf,
    pub depth: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectConfig {
    pub epsilon: f64,
    pub grabcut: GrabCutParams,
    /// Depth colormap range in millimeters.
    pub depth_range: [u16; 2],
    /// Maximum number of points served per cloud.
    pub cloud_cap: usize,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON, grabcut: GrabCutParams::default(), depth_range: [300, 5000], cloud_cap: 200_000 }
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestDoc {
    #[serde(default)]
    undistorted: bool,
    frames: Vec<FrameEntry>,
}

#[derive(Serialize, Deserialize)]
struct CalibrationDoc {
    rig: CameraRig,
}

#[derive(Serialize, Deserialize, Default)]
struct AnnotationsDoc {
    tracks: Vec<BoxTrack>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationProject {
    pub root: PathBuf,
    pub frames: Vec<FrameEntry>,
    /// Whether the manifest already points at undistorted imagery.
    pub undistorted: bool,
    pub rig: CameraRig,
    pub tracks: BTreeMap<TrackId, BoxTrack>,
    pub masks: MaskSet,
    pub config: ProjectConfig,
}

fn modality_kind(m: Modality) -> CameraKind {
    match m {
        Modality::Rgb => CameraKind::Rgb,
        Modality::Depth => CameraKind::Depth,
    }
}

impl AnnotationProject {
    /// An unsaved project over existing imagery.
    pub fn new(root: impl Into<PathBuf>, frames: Vec<FrameEntry>, rig: CameraRig) -> Self {
        Self {
            root: root.into(),
            frames,
            undistorted: false,
            rig,
            tracks: BTreeMap::new(),
            masks: MaskSet::new(),
            config: ProjectConfig::default(),
        }
    }

    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let manifest: ManifestDoc = read_document(&root.join(PROJECT_FILE))?;
        let rig = read_document::<CalibrationDoc>(&root.join(CALIBRATION_FILE))?.rig;
        rig.validate().map_err(|e| match e {
            Error::InvalidCalibration(_) => e,
            other => Error::InvalidCalibration(other.to_string()),
        })?;
        let annotations_path = root.join(ANNOTATIONS_FILE);
        let annotations: AnnotationsDoc =
            if annotations_path.exists() { read_document(&annotations_path)? } else { AnnotationsDoc::default() };
        let config_path = root.join(CONFIG_FILE);
        let config = if config_path.exists() { read_document(&config_path)? } else { ProjectConfig::default() };

        let mut tracks = BTreeMap::new();
        for t in annotations.tracks {
            if tracks.insert(t.track_id, t).is_some() {
                return Err(Error::InvalidDocument {
                    path: annotations_path.clone(),
                    message: "duplicate track_id".into(),
                });
            }
        }
        let mut project = Self {
            root: root.to_path_buf(),
            frames: manifest.frames,
            undistorted: manifest.undistorted,
            rig,
            tracks,
            masks: MaskSet::new(),
            config,
        };
        project.check_frames()?;
        project.masks = project.load_masks()?;
        Ok(project)
    }

    fn check_frames(&self) -> Result<()> {
        for entry in &self.frames {
            for (rel, kind) in [(&entry.rgb, CameraKind::Rgb), (&entry.depth, CameraKind::Depth)] {
                let path = self.root.join(rel);
                if !path.is_file() {
                    return Err(Error::MissingFile(path));
                }
                let (w, h) = image::image_dimensions(&path)?;
                let intr = self.rig.intrinsics(kind);
                if (w, h) != (intr.width, intr.height) {
                    return Err(Error::InvalidCalibration(format!(
                        "{} is {w}x{h} but the {kind:?} camera is {}x{}",
                        path.display(),
                        intr.width,
                        intr.height
                    )));
                }
            }
        }
        Ok(())
    }

    fn mask_path(&self, m: &InstanceMask) -> PathBuf {
        self.root
            .join(MASK_DIR)
            .join(m.modality.as_str())
            .join(format!("{:06}", m.frame_index))
            .join(format!("{}.png", m.instance_id))
    }

    /// Stored mask files as (frame, modality, instance, path).
    fn stored_masks(&self) -> Result<Vec<(u32, Modality, u32, PathBuf)>> {
        let mut out = Vec::new();
        for modality in [Modality::Rgb, Modality::Depth] {
            let dir = self.root.join(MASK_DIR).join(modality.as_str());
            if !dir.is_dir() {
                continue;
            }
            for frame_dir in fs::read_dir(&dir)? {
                let frame_dir = frame_dir?.path();
                let Some(frame) = frame_dir.file_name().and_then(|n| n.to_str()).and_then(|n| n.parse().ok()) else {
                    continue;
                };
                for file in fs::read_dir(&frame_dir)? {
                    let path = file?.path();
                    let instance = path
                        .extension()
                        .filter(|e| *e == "png")
                        .and(path.file_stem())
                        .and_then(|s| s.to_str())
                        .and_then(|s| s.parse().ok());
                    if let Some(instance) = instance {
                        out.push((frame, modality, instance, path));
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn load_masks(&self) -> Result<MaskSet> {
        let mut set = MaskSet::new();
        for (frame, modality, instance, path) in self.stored_masks()? {
            if frame as usize >= self.frames.len() {
                return Err(Error::InvalidDocument { path, message: format!("frame {frame} is not in the manifest") });
            }
            let img = load_gray(&path)?;
            let intr = self.rig.intrinsics(modality_kind(modality));
            if img.dimensions() != (intr.width, intr.height) {
                return Err(Error::InvalidDocument { path, message: "mask size differs from its camera".into() });
            }
            let data = img.pixels().map(|p| p[0] >= 128).collect();
            let mask = BinaryMask::from_vec(img.width() as usize, img.height() as usize, data)?;
            set.insert(InstanceMask { instance_id: instance, frame_index: frame, modality, mask })?;
        }
        Ok(set)
    }

    /// Saves under a short-lived writer lock.
    pub fn save(&self) -> Result<()> {
        let lock = WriterLock::acquire(&self.root)?;
        self.save_locked(&lock)
    }

    /// Saves while the caller already holds the project's writer lock.
    pub fn save_locked(&self, lock: &WriterLock) -> Result<()> {
        if lock.root() != self.root {
            return Err(Error::InvalidInput("writer lock belongs to another project".into()));
        }
        let live: BTreeSet<PathBuf> = self.masks.iter().map(|m| self.mask_path(m)).collect();
        for m in self.masks.iter() {
            let (w, h) = m.mask.dims();
            let img = GrayImage::from_fn(w as u32, h as u32, |x, y| {
                Luma([if m.mask.get(y as usize, x as usize) { 255 } else { 0 }])
            });
            write_atomic(&self.mask_path(m), &png_bytes(&img)?)?;
        }
        for (_, _, _, path) in self.stored_masks()? {
            if !live.contains(&path) {
                fs::remove_file(&path)?;
            }
        }
        write_document(&self.root.join(CONFIG_FILE), &self.config)?;
        write_document(&self.root.join(CALIBRATION_FILE), &CalibrationDoc { rig: self.rig })?;
        let tracks: Vec<BoxTrack> = self.tracks.values().cloned().collect();
        write_document(&self.root.join(ANNOTATIONS_FILE), &AnnotationsDoc { tracks })?;
        // The manifest goes last: a project is only loadable once it exists.
        write_document(
            &self.root.join(PROJECT_FILE),
            &ManifestDoc { undistorted: self.undistorted, frames: self.frames.clone() },
        )
    }

    pub fn frame(&self, index: usize) -> Result<&FrameEntry> {
        self.frames.get(index).ok_or_else(|| Error::NotFound { kind: "frame", id: index.to_string() })
    }

    pub fn load_rgb(&self, index: usize) -> Result<RgbImage> {
        let path = self.root.join(&self.frame(index)?.rgb);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        Ok(image::open(&path)?.to_rgb8())
    }

    pub fn load_depth(&self, index: usize) -> Result<DepthMap> {
        let path = self.root.join(&self.frame(index)?.depth);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        DepthMap::load_png(&path)
    }

    pub fn track(&self, id: TrackId) -> Result<&BoxTrack> {
        self.tracks.get(&id).ok_or_else(|| Error::NotFound { kind: "track", id: id.to_string() })
    }

    pub fn track_mut(&mut self, id: TrackId) -> Result<&mut BoxTrack> {
        self.tracks.get_mut(&id).ok_or_else(|| Error::NotFound { kind: "track", id: id.to_string() })
    }

    pub fn next_track_id(&self) -> TrackId {
        TrackId(self.tracks.keys().next_back().map_or(1, |t| t.0 + 1))
    }

    /// Rejects keyframes outside the manifest before handing them to the track.
    pub fn check_box(&self, b: &Box3D) -> Result<()> {
        self.frame(b.frame_index as usize)?;
        b.validate()
    }

    pub fn set_world_origin(&mut self, xf: ExtrinsicTransform) -> Result<()> {
        crate::bbox::set_world_origin(&mut self.rig, xf)
    }

    /// Every track expanded to one box per frame of its keyframe span.
    ///
    /// Single-keyframe tracks contribute just that keyframe.
    pub fn interpolated_boxes(&self, options: &InterpolationOptions) -> Result<Vec<Box3D>> {
        let mut out = Vec::new();
        for t in self.tracks.values() {
            match t.len() {
                0 => {}
                1 => out.extend(t.keyframes().cloned()),
                _ => out.extend(interpolate_track_with(t, options)?.boxes),
            }
        }
        out.sort_by_key(|b| (b.frame_index, b.track_id));
        Ok(out)
    }

    /// Dense boxes (hybrid rule at the configured epsilon) and all masks.
    pub fn annotation_set(&self) -> Result<AnnotationSet> {
        Ok(AnnotationSet {
            boxes: self.interpolated_boxes(&InterpolationOptions::hybrid(self.config.epsilon))?,
            masks: self.masks.iter().cloned().collect(),
        })
    }
}
