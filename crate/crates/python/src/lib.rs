//! Python bindings: boxes, tracks, projects, segmentation and metrics.
//!
//! Engine failures raise `AnnotationError` (a `ValueError`) whose message starts with
//! the error kind; I/O failures raise `OSError` and missing ids raise `KeyError`.

use std::path::PathBuf;

use nalgebra::{Vector2, Vector3};
use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;

use rgbd_annotate::bbox::{
    interpolate_track_with, slerp_orientation, Box3D, BoxTrack, InterpolationMode, InterpolationOptions, Quat, TrackId,
    DEFAULT_EPSILON,
};
use rgbd_annotate::geometry::{project_point, CameraIntrinsics, CameraRig};
use rgbd_annotate::metrics::{evaluate_dataset, iou, AnnotationSet};
use rgbd_annotate::project::{export_annotations, export_boxes, undistort_frames, AnnotationProject, ExportFormat, FrameEntry};
use rgbd_annotate::segmentation::{
    default_padding, grabcut_iterate, init_trimap, BinaryMask, GrabCutParams, Modality, PixelRect,
};
use rgbd_annotate::Error;

create_exception!(rgbd_annotate_py, AnnotationError, PyValueError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotFound { .. } => PyKeyError::new_err(e.to_string()),
        e if e.is_io() => PyOSError::new_err(format!("{}: {e}", e.kind())),
        e => AnnotationError::new_err(format!("{}: {e}", e.kind())),
    }
}

fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v)
}

fn quat(q: [f64; 4]) -> Quat {
    Quat::new(q[0], q[1], q[2], q[3])
}

fn quat_array(q: &Quat) -> [f64; 4] {
    [q.w, q.x, q.y, q.z]
}

fn mask_from_rows(rows: Vec<Vec<bool>>) -> PyResult<BinaryMask> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(PyValueError::new_err("mask rows differ in length"));
    }
    BinaryMask::from_vec(w, h, rows.into_iter().flatten().collect()).map_err(py_err)
}

fn mask_rows(m: &BinaryMask) -> Vec<Vec<bool>> {
    m.data().chunks(m.width().max(1)).map(<[bool]>::to_vec).collect()
}

/// Oriented 3D box at one frame; orientation is a unit quaternion `[w, x, y, z]`.
#[pyclass(name = "Box3D", module = "rgbd_annotate_py", skip_from_py_object)]
#[derive(Clone)]
struct PyBox3D(Box3D);

#[pymethods]
impl PyBox3D {
    #[new]
    #[pyo3(signature = (track_id, class_label, frame_index, center, size, orientation = [1.0, 0.0, 0.0, 0.0], occlusion = 0.0))]
    fn new(
        track_id: u32,
        class_label: &str,
        frame_index: u32,
        center: [f64; 3],
        size: [f64; 3],
        orientation: [f64; 4],
        occlusion: f64,
    ) -> PyResult<Self> {
        let mut b = Box3D::new(TrackId(track_id), class_label, frame_index, vec3(center), vec3(size), quat(orientation));
        b.occlusion = occlusion;
        b.validate().map_err(py_err)?;
        Ok(Self(b))
    }

    #[getter]
    fn track_id(&self) -> u32 {
        self.0.track_id.0
    }

    #[getter]
    fn class_label(&self) -> &str {
        &self.0.class_label
    }

    #[getter]
    fn frame_index(&self) -> u32 {
        self.0.frame_index
    }

    #[getter]
    fn center(&self) -> [f64; 3] {
        self.0.center.into()
    }

    #[getter]
    fn size(&self) -> [f64; 3] {
        self.0.size.into()
    }

    #[getter]
    fn orientation(&self) -> [f64; 4] {
        quat_array(&self.0.orientation)
    }

    #[getter]
    fn occlusion(&self) -> f64 {
        self.0.occlusion
    }

    #[getter]
    fn is_keyframe(&self) -> bool {
        self.0.is_keyframe
    }

    fn corners(&self) -> Vec<[f64; 3]> {
        self.0.corners().iter().map(|c| (*c).into()).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let b: Box3D = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        b.validate().map_err(py_err)?;
        Ok(Self(b))
    }

    fn __repr__(&self) -> String {
        let b = &self.0;
        format!(
            "Box3D(track_id={}, class_label={:?}, frame_index={}, center={:?}, size={:?})",
            b.track_id.0,
            b.class_label,
            b.frame_index,
            <[f64; 3]>::from(b.center),
            <[f64; 3]>::from(b.size)
        )
    }
}

/// Keyframed box track.
#[pyclass(name = "BoxTrack", module = "rgbd_annotate_py", skip_from_py_object)]
#[derive(Clone)]
struct PyBoxTrack(BoxTrack);

#[pymethods]
impl PyBoxTrack {
    #[new]
    fn new(track_id: u32, class_label: &str) -> Self {
        Self(BoxTrack::new(TrackId(track_id), class_label))
    }

    #[getter]
    fn track_id(&self) -> u32 {
        self.0.track_id.0
    }

    #[getter]
    fn class_label(&self) -> &str {
        &self.0.class_label
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Adds a keyframe; the box's track id and label are replaced by the track's.
    fn insert_keyframe(&mut self, b: PyRef<'_, PyBox3D>) -> PyResult<()> {
        let mut b = b.0.clone();
        b.track_id = self.0.track_id;
        b.class_label = self.0.class_label.clone();
        self.0.insert_keyframe(b).map_err(py_err)
    }

    fn remove_keyframe(&mut self, frame: u32) -> PyResult<PyBox3D> {
        self.0.remove_keyframe(frame).map(PyBox3D).ok_or_else(|| PyKeyError::new_err(frame))
    }

    fn keyframes(&self) -> Vec<PyBox3D> {
        self.0.keyframes().cloned().map(PyBox3D).collect()
    }

    /// One box per frame of the keyframe span. `mode` applies to centers.
    #[pyo3(signature = (epsilon = DEFAULT_EPSILON, mode = "hybrid"))]
    fn interpolate(&self, epsilon: f64, mode: &str) -> PyResult<Vec<PyBox3D>> {
        let mode: InterpolationMode = mode.parse().map_err(py_err)?;
        let dense = interpolate_track_with(&self.0, &InterpolationOptions::with_center_mode(epsilon, mode)).map_err(py_err)?;
        Ok(dense.boxes.into_iter().map(PyBox3D).collect())
    }
}

#[pyclass(name = "CameraIntrinsics", module = "rgbd_annotate_py", skip_from_py_object)]
#[derive(Clone)]
struct PyIntrinsics(CameraIntrinsics);

#[pymethods]
impl PyIntrinsics {
    #[new]
    fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> PyResult<Self> {
        CameraIntrinsics::new(fx, fy, cx, cy, width, height).map(Self).map_err(py_err)
    }

    /// Pixel `[u, v]` of a camera-frame point.
    fn project(&self, point: [f64; 3]) -> PyResult<[f64; 2]> {
        project_point(&vec3(point), &self.0).map(Into::into).map_err(py_err)
    }

    /// Camera-frame point at `depth` meters behind pixel `(u, v)`.
    fn backproject(&self, u: f64, v: f64, depth: f64) -> [f64; 3] {
        let n = self.0.normalize(Vector2::new(u, v));
        [n.x * depth, n.y * depth, depth]
    }
}

/// An annotation project directory.
#[pyclass(name = "Project", module = "rgbd_annotate_py")]
struct PyProject(AnnotationProject);

#[pymethods]
impl PyProject {
    /// New project with one camera serving both modalities. Frame paths are
    /// relative to `root`; the project is written immediately.
    #[staticmethod]
    fn create(root: PathBuf, rgb: Vec<PathBuf>, depth: Vec<PathBuf>, intrinsics: PyRef<'_, PyIntrinsics>) -> PyResult<Self> {
        if rgb.len() != depth.len() {
            return Err(PyValueError::new_err("rgb and depth frame lists differ in length"));
        }
        let frames = rgb.into_iter().zip(depth).map(|(rgb, depth)| FrameEntry { rgb, depth }).collect();
        let project = AnnotationProject::new(&root, frames, CameraRig::coincident(intrinsics.0));
        project.save().map_err(py_err)?;
        AnnotationProject::load(&root).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        AnnotationProject::load(path).map(Self).map_err(py_err)
    }

    fn save(&self) -> PyResult<()> {
        self.0.save().map_err(py_err)
    }

    #[getter]
    fn root(&self) -> PathBuf {
        self.0.root.clone()
    }

    #[getter]
    fn frame_count(&self) -> usize {
        self.0.frames.len()
    }

    #[getter]
    fn undistorted(&self) -> bool {
        self.0.undistorted
    }

    #[getter]
    fn mask_count(&self) -> usize {
        self.0.masks.len()
    }

    fn track_ids(&self) -> Vec<u32> {
        self.0.tracks.keys().map(|t| t.0).collect()
    }

    fn track(&self, id: u32) -> PyResult<PyBoxTrack> {
        self.0.track(TrackId(id)).cloned().map(PyBoxTrack).map_err(py_err)
    }

    /// Inserts or replaces a track after checking every keyframe against the project.
    fn put_track(&mut self, track: PyRef<'_, PyBoxTrack>) -> PyResult<()> {
        for b in track.0.keyframes() {
            self.0.check_box(b).map_err(py_err)?;
        }
        self.0.tracks.insert(track.0.track_id, track.0.clone());
        Ok(())
    }

    fn remove_track(&mut self, id: u32) -> PyResult<PyBoxTrack> {
        self.0.tracks.remove(&TrackId(id)).map(PyBoxTrack).ok_or_else(|| PyKeyError::new_err(id))
    }

    /// All boxes and masks as annotation-set JSON, boxes interpolated by the hybrid rule.
    fn annotation_set_json(&self) -> PyResult<String> {
        let set = self.0.annotation_set().map_err(py_err)?;
        serde_json::to_string(&set).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Writes `flat_per_frame` (CSV) or `masks_png` and returns the written paths.
    #[pyo3(signature = (format = "flat_per_frame"))]
    fn export(&self, format: &str) -> PyResult<Vec<PathBuf>> {
        let format: ExportFormat = format.parse().map_err(py_err)?;
        export_annotations(&self.0, format).map_err(py_err)
    }

    #[pyo3(signature = (epsilon = None, mode = "hybrid"))]
    fn export_boxes(&self, epsilon: Option<f64>, mode: &str) -> PyResult<PathBuf> {
        let mode: InterpolationMode = mode.parse().map_err(py_err)?;
        let options = InterpolationOptions::with_center_mode(epsilon.unwrap_or(self.0.config.epsilon), mode);
        export_boxes(&self.0, &options).map_err(py_err)
    }

    /// Writes undistorted frames; with `adopt` the project switches to them (unsaved).
    #[pyo3(signature = (adopt = false))]
    fn undistort(&mut self, adopt: bool) -> PyResult<usize> {
        let u = undistort_frames(&self.0).map_err(py_err)?;
        let n = u.frames.len();
        if adopt {
            self.0.adopt_undistorted(u);
        }
        Ok(n)
    }
}

/// Intersection over union of two equally sized boolean masks (lists of rows).
#[pyfunction]
fn mask_iou(a: Vec<Vec<bool>>, b: Vec<Vec<bool>>) -> PyResult<f64> {
    iou(&mask_from_rows(a)?, &mask_from_rows(b)?).map_err(py_err)
}

/// Scores annotation-set JSON against ground truth; returns the report as JSON.
#[pyfunction]
fn evaluate(user_json: &str, truth_json: &str) -> PyResult<String> {
    let parse = |s: &str| serde_json::from_str::<AnnotationSet>(s).map_err(|e| PyValueError::new_err(e.to_string()));
    let report = evaluate_dataset(&parse(user_json)?, &parse(truth_json)?).map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn slerp(q0: [f64; 4], q1: [f64; 4], u: f64) -> PyResult<[f64; 4]> {
    slerp_orientation(&quat(q0), &quat(q1), u).map(|q| quat_array(&q)).map_err(py_err)
}

/// GrabCut on packed RGB bytes inside `rect = (x0, y0, x1, y1)`. Returns the
/// frame-sized foreground mask and the energy after each iteration.
#[pyfunction]
#[pyo3(signature = (rgb, width, height, rect, iterations = 5, padding = None))]
fn grabcut(
    py: Python<'_>,
    rgb: Vec<u8>,
    width: u32,
    height: u32,
    rect: (i64, i64, i64, i64),
    iterations: usize,
    padding: Option<u32>,
) -> PyResult<(Vec<Vec<bool>>, Vec<f64>)> {
    let frame = image::RgbImage::from_raw(width, height, rgb)
        .ok_or_else(|| PyValueError::new_err("rgb must hold width * height * 3 bytes"))?;
    let rect = PixelRect::new(rect.0, rect.1, rect.2, rect.3);
    let (w, h) = (width as usize, height as usize);
    py.detach(|| {
        let trimap = init_trimap(rect, w, h, padding.unwrap_or_else(|| default_padding(&rect)), Modality::Rgb)?;
        let crop = rgbd_annotate::segmentation::crop_image(&frame, &trimap.crop);
        let res = grabcut_iterate(&crop, &trimap, None, iterations, &GrabCutParams::default())?;
        Ok((mask_rows(&trimap.to_frame_mask(&res.mask, w, h)), res.energy))
    })
    .map_err(py_err)
}

#[pymodule]
fn rgbd_annotate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AnnotationError", m.py().get_type::<AnnotationError>())?;
    m.add("DEFAULT_EPSILON", DEFAULT_EPSILON)?;
    m.add_class::<PyBox3D>()?;
    m.add_class::<PyBoxTrack>()?;
    m.add_class::<PyIntrinsics>()?;
    m.add_class::<PyProject>()?;
    m.add_function(wrap_pyfunction!(mask_iou, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(slerp, m)?)?;
    m.add_function(wrap_pyfunction!(grabcut, m)?)?;
    Ok(())
}
