//! Depth maps rendered through a perceptual colormap, plus their grayscale luminance.

use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::depth::DepthMap;

/// Rec. 601 luma, rounded.
pub fn luminance(rgb: [u8; 3]) -> u8 {
    let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    y.round().clamp(0.0, 255.0) as u8
}

/// Viridis color at `t ∈ [0, 1]`.
pub fn viridis(t: f64) -> [u8; 3] {
    let c = colorous::VIRIDIS.eval_continuous(t.clamp(0.0, 1.0));
    [c.r, c.g, c.b]
}

/// Linear normalization of `[min_mm, max_mm]` onto the colormap. Depth values
/// outside the range are clamped; zero (no measurement) renders black.
pub fn colormap_depth(depth: &DepthMap, min_mm: u16, max_mm: u16) -> Result<(RgbImage, GrayImage)> {
    if min_mm >= max_mm {
        return Err(Error::EmptyRange { min: min_mm, max: max_mm });
    }
    let (w, h) = (depth.width() as u32, depth.height() as u32);
    let span = (max_mm - min_mm) as f64;
    let color = RgbImage::from_fn(w, h, |x, y| {
        let d = depth.get(y as usize, x as usize);
        if d == 0 {
            Rgb([0, 0, 0])
        } else {
            Rgb(viridis((d.clamp(min_mm, max_mm) - min_mm) as f64 / span))
        }
    });
    let gray = GrayImage::from_fn(w, h, |x, y| {
        let d = depth.get(y as usize, x as usize);
        Luma([if d == 0 { 0 } else { luminance(color.get_pixel(x, y).0) }])
    });
    Ok((color, gray))
}

/// Replicates a grayscale raster into three channels for the color segmentation path.
pub fn gray_to_rgb(gray: &GrayImage) -> RgbImage {
    RgbImage::from_fn(gray.width(), gray.height(), |x, y| {
        let v = gray.get_pixel(x, y).0[0];
        Rgb([v, v, v])
    })
}
