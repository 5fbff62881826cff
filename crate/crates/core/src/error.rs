use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Variant names double as stable, machine-readable error kinds (see [`Error::kind`]),
/// which the CLI and the HTTP service surface verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point lies behind the camera (z = {z})")]
    PointBehindCamera { z: f64 },
    #[error("undistortion did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("distortion collapses the valid image region")]
    DegenerateDistortion,
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch { expected: (usize, usize), actual: (usize, usize) },
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("track {track} already has a keyframe at frame {frame}")]
    TrackConflict { track: u32, frame: u32 },
    #[error("at least two keyframes are required, got {0}")]
    TooFewKeyframes(usize),
    #[error("quaternion norm {0} is not 1")]
    NonUnitQuaternion(f64),
    #[error("projected box area is below one pixel (fallback truncation {fallback})")]
    DegenerateProjection { fallback: f64 },
    #[error("value {value} for {name} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("all box corners lie behind the camera")]
    AllCornersBehindCamera,
    #[error("rectangle is empty or does not intersect the frame")]
    EmptyRect,
    #[error("trimap does not contain both foreground and background pixels")]
    AllOneLabel,
    #[error("gaussian mixture covariance is singular after regularization")]
    SingularGmm,
    #[error("mask modality mismatch")]
    ModalityMismatch,
    #[error("depth range is empty (min {min} >= max {max})")]
    EmptyRange { min: u16, max: u16 },
    #[error("viewer projection is not invertible")]
    DegenerateView,
    #[error("no camera calibration available")]
    NoCalibration,
    #[error("mask for instance {instance} already exists at frame {frame}")]
    MaskConflict { instance: u32, frame: u32 },
    #[error("box size components must be positive")]
    NonPositiveSize,
    #[error("ground truth contains no annotations")]
    EmptyTruth,
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("unsupported format_version {found} in {}", .path.display())]
    SchemaVersionUnsupported { path: PathBuf, found: u64 },
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error("another writer holds the project lock at {}", .0.display())]
    WriterLockHeld(PathBuf),
    #[error("nothing to export")]
    NothingToExport,
    #[error("unknown {kind} {id}")]
    NotFound { kind: &'static str, id: String },
    #[error("invalid document {}: {message}", .path.display())]
    InvalidDocument { path: PathBuf, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier of the error case.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PointBehindCamera { .. } => "PointBehindCamera",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::DegenerateDistortion => "DegenerateDistortion",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidRotation(_) => "InvalidRotation",
            Error::InvalidIntrinsics(_) => "InvalidIntrinsics",
            Error::TrackConflict { .. } => "TrackConflict",
            Error::TooFewKeyframes(_) => "TooFewKeyframes",
            Error::NonUnitQuaternion(_) => "NonUnitQuaternion",
            Error::DegenerateProjection { .. } => "DegenerateProjection",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::AllCornersBehindCamera => "AllCornersBehindCamera",
            Error::EmptyRect => "EmptyRect",
            Error::AllOneLabel => "AllOneLabel",
            Error::SingularGmm => "SingularGmm",
            Error::ModalityMismatch => "ModalityMismatch",
            Error::EmptyRange { .. } => "EmptyRange",
            Error::DegenerateView => "DegenerateView",
            Error::NoCalibration => "NoCalibration",
            Error::MaskConflict { .. } => "MaskConflict",
            Error::NonPositiveSize => "NonPositiveSize",
            Error::EmptyTruth => "EmptyTruth",
            Error::MissingFile(_) => "MissingFile",
            Error::SchemaVersionUnsupported { .. } => "SchemaVersionUnsupported",
            Error::InvalidCalibration(_) => "InvalidCalibration",
            Error::WriterLockHeld(_) => "WriterLockHeld",
            Error::NothingToExport => "NothingToExport",
            Error::NotFound { .. } => "NotFound",
            Error::InvalidDocument { .. } => "InvalidDocument",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Image(_) => "Image",
            Error::Io(_) => "Io",
        }
    }

    /// True for failures caused by the environment rather than by invalid input.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Image(_) | Error::WriterLockHeld(_) | Error::MissingFile(_)
        )
    }
}
