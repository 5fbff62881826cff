//! Binary and instance masks, mask registries, resampling and morphology.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rect::PixelRect;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Rgb,
    Depth,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Rgb => "rgb",
            Modality::Depth => "depth",
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgb" => Ok(Modality::Rgb),
            "depth" => Ok(Modality::Depth),
            other => Err(Error::InvalidInput(format!("unknown modality {other:?}"))),
        }
    }
}

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch { expected: (width, height), actual: (data.len(), 1) });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let data = (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.contains(&true)
    }

    pub fn check_same_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), actual: other.dims() });
        }
        Ok(())
    }

    /// Tight bounding rectangle of the set pixels.
    pub fn bounding_rect(&self) -> Option<PixelRect> {
        let mut rect: Option<PixelRect> = None;
        for r in 0..self.height {
            for c in 0..self.width {
                if self.get(r, c) {
                    let (x, y) = (c as i64, r as i64);
                    rect = Some(match rect {
                        None => PixelRect::new(x, y, x + 1, y + 1),
                        Some(b) => PixelRect::new(b.x0.min(x), b.y0.min(y), b.x1.max(x + 1), b.y1.max(y + 1)),
                    });
                }
            }
        }
        rect
    }

    /// Sub-mask covering `rect` (which must lie inside the mask).
    pub fn crop(&self, rect: &PixelRect) -> BinaryMask {
        let (x0, y0) = (rect.x0 as usize, rect.y0 as usize);
        BinaryMask::from_fn(rect.width() as usize, rect.height() as usize, |r, c| self.get(y0 + r, x0 + c))
    }

    /// Copies `patch` into this mask with its top-left corner at `(x0, y0)`.
    pub fn paste(&mut self, patch: &BinaryMask, x0: usize, y0: usize) {
        for r in 0..patch.height.min(self.height.saturating_sub(y0)) {
            for c in 0..patch.width.min(self.width.saturating_sub(x0)) {
                self.set(y0 + r, x0 + c, patch.get(r, c));
            }
        }
    }
}

/// One instance's mask in one frame, at full frame resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMask {
    pub instance_id: u32,
    pub frame_index: u32,
    pub modality: Modality,
    pub mask: BinaryMask,
}

/// All instance masks of a project keyed by (frame, modality, instance).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaskSet {
    masks: BTreeMap<(u32, Modality, u32), InstanceMask>,
}

impl MaskSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &InstanceMask> {
        self.masks.values()
    }

    pub fn get(&self, frame: u32, modality: Modality, instance: u32) -> Option<&InstanceMask> {
        self.masks.get(&(frame, modality, instance))
    }

    /// Masks of one frame and modality in instance order.
    pub fn frame(&self, frame: u32, modality: Modality) -> impl Iterator<Item = &InstanceMask> {
        self.masks.range((frame, modality, 0)..=(frame, modality, u32::MAX)).map(|(_, m)| m)
    }

    pub fn insert(&mut self, mask: InstanceMask) -> Result<()> {
        let key = (mask.frame_index, mask.modality, mask.instance_id);
        if self.masks.contains_key(&key) {
            return Err(Error::MaskConflict { instance: mask.instance_id, frame: mask.frame_index });
        }
        self.masks.insert(key, mask);
        Ok(())
    }

    /// Inserts or replaces; returns the previous mask in that slot.
    pub fn upsert(&mut self, mask: InstanceMask) -> Option<InstanceMask> {
        self.masks.insert((mask.frame_index, mask.modality, mask.instance_id), mask)
    }

    pub fn remove(&mut self, frame: u32, modality: Modality, instance: u32) -> Option<InstanceMask> {
        self.masks.remove(&(frame, modality, instance))
    }
}

/// Value copy of `mask` into `target_frame`, rejected if that slot is occupied.
pub fn copy_mask(set: &MaskSet, mask: &InstanceMask, target_frame: u32) -> Result<InstanceMask> {
    if set.get(target_frame, mask.modality, mask.instance_id).is_some() {
        return Err(Error::MaskConflict { instance: mask.instance_id, frame: target_frame });
    }
    Ok(InstanceMask { frame_index: target_frame, ..mask.clone() })
}

fn check_factor(factor: usize) -> Result<()> {
    if factor == 0 {
        return Err(Error::InvalidInput("resampling factor must be at least 1".into()));
    }
    Ok(())
}

/// Block majority vote: an output pixel is set when strictly more than half of its
/// (possibly partial, at the border) block is set.
pub fn downsample_mask(mask: &BinaryMask, factor: usize) -> Result<BinaryMask> {
    check_factor(factor)?;
    let (w, h) = (mask.width.div_ceil(factor), mask.height.div_ceil(factor));
    Ok(BinaryMask::from_fn(w, h, |r, c| {
        let rows = r * factor..((r + 1) * factor).min(mask.height);
        let cols = c * factor..((c + 1) * factor).min(mask.width);
        let n = rows.len() * cols.len();
        let ones = rows.flat_map(|y| cols.clone().map(move |x| (y, x))).filter(|&(y, x)| mask.get(y, x)).count();
        ones * 2 > n
    }))
}

/// Nearest-neighbor upsampling to an explicit target size.
pub fn upsample_mask(mask: &BinaryMask, factor: usize, width: usize, height: usize) -> Result<BinaryMask> {
    check_factor(factor)?;
    if mask.width != width.div_ceil(factor) || mask.height != height.div_ceil(factor) {
        return Err(Error::DimensionMismatch {
            expected: (width.div_ceil(factor), height.div_ceil(factor)),
            actual: mask.dims(),
        });
    }
    Ok(BinaryMask::from_fn(width, height, |r, c| mask.get(r / factor, c / factor)))
}

/// Downsample then upsample back to the original size.
pub fn resample_mask(mask: &BinaryMask, factor: usize) -> Result<BinaryMask> {
    if factor == 1 {
        return Ok(mask.clone());
    }
    upsample_mask(&downsample_mask(mask, factor)?, factor, mask.width, mask.height)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphOp {
    Open,
    Close,
}

// Square window min/max; out-of-image pixels are ignored.
fn window(mask: &BinaryMask, radius: usize, dilate: bool) -> BinaryMask {
    BinaryMask::from_fn(mask.width, mask.height, |r, c| {
        let rows = r.saturating_sub(radius)..=(r + radius).min(mask.height - 1);
        let mut any = false;
        let mut all = true;
        for y in rows {
            for x in c.saturating_sub(radius)..=(c + radius).min(mask.width - 1) {
                let v = mask.get(y, x);
                any |= v;
                all &= v;
            }
        }
        if dilate {
            any
        } else {
            all
        }
    })
}

pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    window(mask, radius, false)
}

pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    window(mask, radius, true)
}

/// Binary opening or closing with a `(2r+1)²` square. Radius 0 is the identity.
pub fn morph_filter(mask: &BinaryMask, op: MorphOp, radius: usize) -> BinaryMask {
    if radius == 0 || mask.width == 0 || mask.height == 0 {
        return mask.clone();
    }
    match op {
        MorphOp::Open => dilate(&erode(mask, radius), radius),
        MorphOp::Close => erode(&dilate(mask, radius), radius),
    }
}
