//! Segmentation agreement between two binary masks.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::segmentation::mask::BinaryMask;
use crate::segmentation::rect::PixelRect;

fn counts(a: &BinaryMask, b: &BinaryMask) -> Result<(usize, usize)> {
    a.check_same_dims(b)?;
    let (mut inter, mut union) = (0, 0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok((inter, union))
}

/// `|A ∩ B| / |A ∪ B|`, defined as 1 when both masks are empty.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let (inter, union) = counts(a, b)?;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Mean absolute per-pixel difference over the whole raster.
pub fn mae(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let (inter, union) = counts(a, b)?;
    let n = a.width() * a.height();
    Ok(if n == 0 { 0.0 } else { (union - inter) as f64 / n as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskPairEval {
    pub iou: f64,
    pub mae: f64,
    /// Rectangle the MAE is averaged over: the bounding box of both masks.
    pub window: Option<PixelRect>,
}

/// IoU over the frame and MAE inside the tight window containing both masks.
pub fn evaluate_mask_pair(user: &BinaryMask, truth: &BinaryMask) -> Result<MaskPairEval> {
    let iou = iou(user, truth)?;
    let window = match (user.bounding_rect(), truth.bounding_rect()) {
        (Some(a), Some(b)) => Some(PixelRect::new(a.x0.min(b.x0), a.y0.min(b.y0), a.x1.max(b.x1), a.y1.max(b.y1))),
        (a, b) => a.or(b),
    };
    let mae = match &window {
        Some(w) => mae(&user.crop(w), &truth.crop(w))?,
        None => 0.0,
    };
    Ok(MaskPairEval { iou, mae, window })
}
