//! Trimaps seeding GrabCut, and the edits applied to them before a cut.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::mask::{BinaryMask, InstanceMask, Modality};
use super::rect::PixelRect;
use crate::error::{Error, Result};
use crate::geometry::depth::DepthMap;
use crate::geometry::rig::CameraRig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrimapLabel {
    HardBackground,
    HardForeground,
    SoftBackground,
    SoftForeground,
}

impl TrimapLabel {
    pub fn is_hard(self) -> bool {
        matches!(self, TrimapLabel::HardBackground | TrimapLabel::HardForeground)
    }

    pub fn is_foreground(self) -> bool {
        matches!(self, TrimapLabel::HardForeground | TrimapLabel::SoftForeground)
    }
}

/// Labels over a working crop of one frame.
///
/// `crop` and `rect` are in frame pixels; `labels` is row-major over `crop`. Pixels
/// of the frame outside `crop` are implicitly hard background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trimap {
    pub crop: PixelRect,
    pub rect: PixelRect,
    pub padding: u32,
    pub modality: Modality,
    labels: Vec<TrimapLabel>,
}

/// 20 % of the rectangle's larger side, at least 10 px.
pub fn default_padding(rect: &PixelRect) -> u32 {
    let side = rect.width().max(rect.height()) as f64;
    ((0.2 * side).round() as u32).max(10)
}

/// Soft foreground inside `rect`, soft background on the padding ring, both clipped
/// to the frame.
pub fn init_trimap(
    rect: PixelRect,
    frame_width: usize,
    frame_height: usize,
    padding: u32,
    modality: Modality,
) -> Result<Trimap> {
    let frame = PixelRect::frame(frame_width, frame_height);
    let inner = rect.intersect(&frame);
    if rect.is_empty() || inner.is_empty() {
        return Err(Error::EmptyRect);
    }
    let crop = rect.expand(padding as i64).intersect(&frame);
    let mut labels = Vec::with_capacity(crop.area() as usize);
    for y in crop.y0..crop.y1 {
        for x in crop.x0..crop.x1 {
            labels.push(if inner.contains(x, y) { TrimapLabel::SoftForeground } else { TrimapLabel::SoftBackground });
        }
    }
    Ok(Trimap { crop, rect: inner, padding, modality, labels })
}

impl Trimap {
    pub fn from_labels(crop: PixelRect, modality: Modality, labels: Vec<TrimapLabel>) -> Result<Self> {
        if labels.len() != crop.area() as usize {
            return Err(Error::DimensionMismatch {
                expected: (crop.width() as usize, crop.height() as usize),
                actual: (labels.len(), 1),
            });
        }
        Ok(Self { crop, rect: crop, padding: 0, modality, labels })
    }

    pub fn width(&self) -> usize {
        self.crop.width() as usize
    }

    pub fn height(&self) -> usize {
        self.crop.height() as usize
    }

    pub fn labels(&self) -> &[TrimapLabel] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> TrimapLabel {
        self.labels[row * self.width() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, label: TrimapLabel) {
        let w = self.width();
        self.labels[row * w + col] = label;
    }

    pub fn count(&self, label: TrimapLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Crop-relative position of a frame pixel, if inside the crop.
    pub fn to_crop(&self, x: i64, y: i64) -> Option<(usize, usize)> {
        self.crop.contains(x, y).then(|| ((y - self.crop.y0) as usize, (x - self.crop.x0) as usize))
    }

    /// Foreground labels (hard or soft) as a crop-sized mask.
    pub fn foreground(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width(), self.height(), |r, c| self.get(r, c).is_foreground())
    }

    /// Soft labels follow `mask`, so a later run resumes from that segmentation.
    /// Hard labels are kept.
    pub fn resume_from(&mut self, mask: &BinaryMask) -> Result<()> {
        if mask.dims() != (self.width(), self.height()) {
            return Err(Error::DimensionMismatch { expected: (self.width(), self.height()), actual: mask.dims() });
        }
        for (l, &m) in self.labels.iter_mut().zip(mask.data()) {
            if !l.is_hard() {
                *l = if m { TrimapLabel::SoftForeground } else { TrimapLabel::SoftBackground };
            }
        }
        Ok(())
    }

    /// Places a crop-resolution mask into an empty full-frame mask.
    pub fn to_frame_mask(&self, crop_mask: &BinaryMask, frame_width: usize, frame_height: usize) -> BinaryMask {
        let mut full = BinaryMask::new(frame_width, frame_height);
        full.paste(crop_mask, self.crop.x0 as usize, self.crop.y0 as usize);
        full
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScribbleLabel {
    Foreground,
    Background,
}

/// Brush stroke along a polyline of `[x, y]` crop coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub points: Vec<[f64; 2]>,
    pub radius: f64,
    pub label: ScribbleLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScribbleSet {
    pub strokes: Vec<Stroke>,
}

fn segment_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let u = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * u)).norm()
}

/// Hard labels along every stroke; later strokes override earlier ones. Pixels
/// whose centers lie within `radius` of the polyline are covered, and anything
/// outside the crop is ignored.
pub fn apply_scribbles(trimap: &Trimap, scribbles: &ScribbleSet) -> Trimap {
    let mut out = trimap.clone();
    let (w, h) = (out.width() as i64, out.height() as i64);
    for stroke in &scribbles.strokes {
        if stroke.points.is_empty() {
            continue;
        }
        let label = match stroke.label {
            ScribbleLabel::Foreground => TrimapLabel::HardForeground,
            ScribbleLabel::Background => TrimapLabel::HardBackground,
        };
        let pts: Vec<Vector2<f64>> = stroke.points.iter().map(|p| Vector2::new(p[0], p[1])).collect();
        let r = stroke.radius.max(0.0);
        let segments: Vec<(Vector2<f64>, Vector2<f64>)> =
            if pts.len() == 1 { vec![(pts[0], pts[0])] } else { pts.windows(2).map(|s| (s[0], s[1])).collect() };
        for (a, b) in segments {
            let x0 = ((a.x.min(b.x) - r).floor() as i64).max(0);
            let x1 = ((a.x.max(b.x) + r).ceil() as i64).min(w - 1);
            let y0 = ((a.y.min(b.y) - r).floor() as i64).max(0);
            let y1 = ((a.y.max(b.y) + r).ceil() as i64).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if segment_distance(Vector2::new(x as f64, y as f64), a, b) <= r {
                        out.set(y as usize, x as usize, label);
                    }
                }
            }
        }
    }
    out
}

/// Marks pixels covered by other instances' masks as hard background.
pub fn overlap_background(trimap: &Trimap, others: &[InstanceMask]) -> Result<Trimap> {
    let mut out = trimap.clone();
    for other in others {
        if other.modality != trimap.modality {
            return Err(Error::ModalityMismatch);
        }
        let region = trimap.crop.intersect(&PixelRect::frame(other.mask.width(), other.mask.height()));
        for y in region.y0..region.y1 {
            for x in region.x0..region.x1 {
                if other.mask.get(y as usize, x as usize) {
                    let (r, c) = out.to_crop(x, y).expect("region lies in the crop");
                    out.set(r, c, TrimapLabel::HardBackground);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedHardness {
    #[default]
    Hard,
    Soft,
}

/// Projects a depth-frame mask into the RGB frame and marks the landed pixels of the
/// crop as foreground. Existing hard labels are kept.
pub fn seed_rgb_from_depth(
    depth_mask: &InstanceMask,
    depth: &DepthMap,
    rig: Option<&CameraRig>,
    trimap: &Trimap,
    hardness: SeedHardness,
) -> Result<Trimap> {
    let rig = rig.ok_or(Error::NoCalibration)?;
    if depth_mask.modality != Modality::Depth || trimap.modality != Modality::Rgb {
        return Err(Error::ModalityMismatch);
    }
    if depth_mask.mask.dims() != depth.dims() {
        return Err(Error::DimensionMismatch { expected: depth.dims(), actual: depth_mask.mask.dims() });
    }
    let (di, ri) = (rig.depth.intrinsics, rig.rgb.intrinsics);
    let label = match hardness {
        SeedHardness::Hard => TrimapLabel::HardForeground,
        SeedHardness::Soft => TrimapLabel::SoftForeground,
    };
    let mut out = trimap.clone();
    for row in 0..depth.height() {
        for col in 0..depth.width() {
            let d = depth.get(row, col);
            if d == 0 || !depth_mask.mask.get(row, col) {
                continue;
            }
            let z = d as f64 / 1000.0;
            let p = Vector3::new((col as f64 - di.cx) / di.fx * z, (row as f64 - di.cy) / di.fy * z, z);
            let q = rig.rgb_from_depth.apply(&p);
            if q.z <= 0.0 {
                continue;
            }
            let u = (ri.fx * q.x / q.z + ri.cx).round() as i64;
            let v = (ri.fy * q.y / q.z + ri.cy).round() as i64;
            if let Some((r, c)) = out.to_crop(u, v) {
                if !out.get(r, c).is_hard() {
                    out.set(r, c, label);
                }
            }
        }
    }
    Ok(out)
}
