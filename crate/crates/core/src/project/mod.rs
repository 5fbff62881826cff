//! Project directories: loading, validation, atomic saves and exports.

pub mod export;
pub mod io;
pub mod store;

pub use export::{export_annotations, export_boxes, export_masks, undistort_frames, ExportFormat, UndistortedFrames};
pub use io::{WriterLock, FORMAT_VERSION};
pub use store::{AnnotationProject, FrameEntry, ProjectConfig};
