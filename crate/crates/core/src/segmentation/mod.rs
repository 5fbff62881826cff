//! GrabCut instance segmentation, trimap editing, point selection and mask seeding.

pub mod colormap;
pub mod gmm;
pub mod grabcut;
pub mod mask;
pub mod maxflow;
pub mod rect;
pub mod select;
pub mod trimap;

pub use colormap::{colormap_depth, gray_to_rgb};
pub use gmm::{Gmm, GmmPair};
pub use grabcut::{crop_image, grabcut_downsampled, grabcut_iterate, GrabCutParams, GrabCutResult};
pub use mask::{copy_mask, morph_filter, resample_mask, BinaryMask, InstanceMask, MaskSet, Modality, MorphOp};
pub use rect::{infer_rect, interpolate_rects, PixelRect};
pub use select::{mask_from_selection, select_points, SelectionMode, SelectionRect3D};
pub use trimap::{
    apply_scribbles, default_padding, init_trimap, overlap_background, seed_rgb_from_depth, ScribbleLabel,
    ScribbleSet, SeedHardness, Stroke, Trimap, TrimapLabel,
};
