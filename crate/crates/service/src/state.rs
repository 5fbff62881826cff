use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use image::RgbImage;

use rgbd_annotate::geometry::{backproject_depth, transform_points, PointCloud};
use rgbd_annotate::project::{AnnotationProject, WriterLock};
use rgbd_annotate::segmentation::{colormap_depth, gray_to_rgb, GmmPair, Modality, Trimap};
use rgbd_annotate::Result;

use crate::error::{ApiError, ApiResult};

/// A GrabCut session is addressed by (frame, instance, modality).
pub type SessionKey = (u32, u32, Modality);

#[derive(Debug, Clone)]
pub struct GrabCutSession {
    pub trimap: Trimap,
    pub gmms: Option<GmmPair>,
    pub energy: Vec<f64>,
}

pub struct Session {
    pub project: AnnotationProject,
    lock: Option<WriterLock>,
    revision: u64,
    pub grabcut: BTreeMap<SessionKey, GrabCutSession>,
    busy: BTreeSet<SessionKey>,
}

impl Session {
    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Optimistic concurrency: the client's revision must be the current one.
    pub fn check(&self, sent: Option<u64>) -> ApiResult<()> {
        match sent {
            None => Err(ApiError::revision_required()),
            Some(r) if r != self.revision => Err(ApiError::revision_conflict(r, self.revision)),
            Some(_) => Ok(()),
        }
    }

    pub fn bump(&mut self) -> u64 {
        self.revision += 1;
        self.revision
    }

    /// Claims a segmentation key for one job; released by [`Session::release`].
    pub fn claim(&mut self, key: SessionKey) -> ApiResult<()> {
        if !self.busy.insert(key) {
            return Err(ApiError::busy());
        }
        Ok(())
    }

    pub fn release(&mut self, key: &SessionKey) {
        self.busy.remove(key);
    }

    pub fn is_busy(&self, key: &SessionKey) -> bool {
        self.busy.contains(key)
    }

    pub fn save(&self) -> Result<()> {
        match &self.lock {
            Some(lock) => self.project.save_locked(lock),
            None => self.project.save(),
        }
    }

    /// The frame's depth points in world coordinates, decimated to `cap`.
    pub fn cloud(&self, frame: usize, cap: usize) -> Result<PointCloud> {
        let depth = self.project.load_depth(frame)?;
        let cloud = backproject_depth(&depth, &self.project.rig.depth.intrinsics)?;
        Ok(transform_points(&cloud, &self.project.rig.world_origin).decimated(cap))
    }

    /// Color input for GrabCut: the RGB frame, or the colormapped depth's gray image.
    pub fn segmentation_image(&self, frame: usize, modality: Modality) -> Result<RgbImage> {
        match modality {
            Modality::Rgb => self.project.load_rgb(frame),
            Modality::Depth => {
                let [lo, hi] = self.project.config.depth_range;
                let (_, gray) = colormap_depth(&self.project.load_depth(frame)?, lo, hi)?;
                Ok(gray_to_rgb(&gray))
            }
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Mutex<Session>>,
}

impl AppState {
    pub fn new(project: AnnotationProject, lock: Option<WriterLock>) -> Self {
        let session = Session { project, lock, revision: 0, grabcut: BTreeMap::new(), busy: BTreeSet::new() };
        Self { inner: Arc::new(Mutex::new(session)) }
    }

    /// Loads the project and holds its writer lock for the life of the server.
    pub fn open(root: &Path) -> Result<Self> {
        let lock = WriterLock::acquire(root)?;
        let project = AnnotationProject::load(root)?;
        Ok(Self::new(project, Some(lock)))
    }

    pub fn session(&self) -> MutexGuard<'_, Session> {
        // Poisoning only records that some handler panicked; the session itself stays usable.
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}
