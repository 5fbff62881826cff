//! RGB-D annotation engine.
//!
//! Camera geometry and undistortion, keyframed 3D box tracks, GrabCut instance
//! segmentation, annotation quality metrics and an on-disk project format.

pub mod bbox;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod project;
pub mod segmentation;

pub use error::{Error, Result};
