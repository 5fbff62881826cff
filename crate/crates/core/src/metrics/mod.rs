//! Annotation-quality metrics for masks, boxes, whole sequences and interpolation modes.

pub mod boxes;
pub mod dataset;
pub mod interpolation;
pub mod masks;

pub use boxes::{aoe, ase, ate, evaluate_box_pair, BoxPairEval};
pub use dataset::{evaluate_dataset, match_tracks, AnnotationSet, BoxSummary, DatasetEval, MaskSummary, TrackMatch};
pub use interpolation::{compare_interpolation, comparison_text, FrameError, ModeEval};
pub use masks::{evaluate_mask_pair, iou, mae, MaskPairEval};
