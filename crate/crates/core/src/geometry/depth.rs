//! Depth maps and the point clouds backprojected from them.

use std::path::Path;

use image::{ImageBuffer, Luma};
use nalgebra::Vector3;

use super::camera::{CameraIntrinsics, ExtrinsicTransform};
use crate::error::{Error, Result};

/// 16-bit depth in millimeters; zero marks a missing measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<u16>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<u16>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (values.len(), 1),
            });
        }
        Ok(Self { width, height, values })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, values: vec![0; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Self { width, height, values: vec![value; width * height] }
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

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u16) {
        self.values[row * self.width + col] = value;
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn check_dims(&self, intr: &CameraIntrinsics) -> Result<()> {
        if self.dims() != intr.dims() {
            return Err(Error::DimensionMismatch { expected: intr.dims(), actual: self.dims() });
        }
        Ok(())
    }

    pub fn to_image(&self) -> ImageBuffer<Luma<u16>, Vec<u16>> {
        ImageBuffer::from_raw(self.width as u32, self.height as u32, self.values.clone())
            .expect("buffer length matches dimensions")
    }

    pub fn from_image(img: &ImageBuffer<Luma<u16>, Vec<u16>>) -> Self {
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            values: img.as_raw().clone(),
        }
    }

    /// Reads a 16-bit single-channel PNG.
    pub fn load_png(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let img = image::open(path)?.into_luma16();
        Ok(Self::from_image(&img))
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_image().save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Pixel position `(row, col)` in a depth map.
pub type PixelIndex = (usize, usize);

/// Points in meters, each remembering the depth pixel it came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub source_pixel: Vec<PixelIndex>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps every `stride`-th point so that at most `cap` points remain.
    pub fn decimated(&self, cap: usize) -> PointCloud {
        if self.len() <= cap || cap == 0 {
            return self.clone();
        }
        let stride = self.len().div_ceil(cap);
        PointCloud {
            points: self.points.iter().step_by(stride).copied().collect(),
            source_pixel: self.source_pixel.iter().step_by(stride).copied().collect(),
        }
    }
}

/// Lifts every nonzero depth pixel to a camera-frame point.
pub fn backproject_depth(depth: &DepthMap, intr: &CameraIntrinsics) -> Result<PointCloud> {
    depth.check_dims(intr)?;
    let mut cloud = PointCloud::default();
    for row in 0..depth.height {
        for col in 0..depth.width {
            let raw = depth.get(row, col);
            if raw == 0 {
                continue;
            }
            let z = raw as f64 / 1000.0;
            cloud.points.push(Vector3::new(
                z * (col as f64 - intr.cx) / intr.fx,
                z * (row as f64 - intr.cy) / intr.fy,
                z,
            ));
            cloud.source_pixel.push((row, col));
        }
    }
    Ok(cloud)
}

pub fn transform_points(cloud: &PointCloud, xf: &ExtrinsicTransform) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| xf.apply(p)).collect(),
        source_pixel: cloud.source_pixel.clone(),
    }
}
