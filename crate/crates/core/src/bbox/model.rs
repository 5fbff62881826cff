use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::rotation::Quat;
use crate::error::{Error, Result};

/// Interpolation ID shared by every box of one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackId(pub u32);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Oriented 3D box in world coordinates.
///
/// `size` is (width, height, length) along the box's local x, y and z axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub center: Vector3<f64>,
    pub size: Vector3<f64>,
    pub orientation: Quat,
    pub frame_index: u32,
    pub track_id: TrackId,
    pub class_label: String,
    #[serde(default)]
    pub occlusion: f64,
    #[serde(default)]
    pub is_keyframe: bool,
}

impl Box3D {
    pub fn new(
        track_id: TrackId,
        class_label: impl Into<String>,
        frame_index: u32,
        center: Vector3<f64>,
        size: Vector3<f64>,
        orientation: Quat,
    ) -> Self {
        Self {
            center,
            size,
            orientation,
            frame_index,
            track_id,
            class_label: class_label.into(),
            occlusion: 0.0,
            is_keyframe: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("box center must be finite".into()));
        }
        if !self.size.iter().all(|&s| s > 0.0 && s.is_finite()) {
            return Err(Error::NonPositiveSize);
        }
        self.orientation.ensure_unit()?;
        if !(0.0..=1.0).contains(&self.occlusion) {
            return Err(Error::OutOfRange { name: "occlusion", value: self.occlusion });
        }
        Ok(())
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.orientation.to_rotation_matrix()
    }

    /// The eight corners `center + R (±w/2, ±h/2, ±l/2)`.
    ///
    /// Bit `i` of the corner index selects the sign on axis `i`.
    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let r = self.rotation();
        let half = self.size / 2.0;
        std::array::from_fn(|i| {
            let sign = |bit: usize| if i & (1 << bit) != 0 { 1.0 } else { -1.0 };
            self.center + r * Vector3::new(sign(0) * half.x, sign(1) * half.y, sign(2) * half.z)
        })
    }
}

/// Corner index pairs forming the twelve edges of [`Box3D::corners`].
pub const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// One object's human-set keyframes, ordered by frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrackRepr", into = "TrackRepr")]
pub struct BoxTrack {
    pub track_id: TrackId,
    pub class_label: String,
    keyframes: BTreeMap<u32, Box3D>,
}

#[derive(Serialize, Deserialize)]
struct TrackRepr {
    track_id: TrackId,
    class_label: String,
    keyframes: Vec<Box3D>,
}

impl TryFrom<TrackRepr> for BoxTrack {
    type Error = Error;

    fn try_from(r: TrackRepr) -> Result<Self> {
        Self::from_keyframes(r.track_id, r.class_label, r.keyframes)
    }
}

impl From<BoxTrack> for TrackRepr {
    fn from(t: BoxTrack) -> Self {
        Self { track_id: t.track_id, class_label: t.class_label, keyframes: t.keyframes.into_values().collect() }
    }
}

impl BoxTrack {
    pub fn new(track_id: TrackId, class_label: impl Into<String>) -> Self {
        Self { track_id, class_label: class_label.into(), keyframes: BTreeMap::new() }
    }

    pub fn from_keyframes(
        track_id: TrackId,
        class_label: impl Into<String>,
        boxes: impl IntoIterator<Item = Box3D>,
    ) -> Result<Self> {
        let mut track = Self::new(track_id, class_label);
        for b in boxes {
            track.insert_keyframe(b)?;
        }
        Ok(track)
    }

    pub fn keyframes(&self) -> impl DoubleEndedIterator<Item = &Box3D> + ExactSizeIterator {
        self.keyframes.values()
    }

    pub fn keyframe(&self, frame: u32) -> Option<&Box3D> {
        self.keyframes.get(&frame)
    }

    pub fn len(&self) -> usize {
        self.keyframes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keyframes.is_empty()
    }

    pub fn frame_span(&self) -> Option<(u32, u32)> {
        Some((*self.keyframes.keys().next()?, *self.keyframes.keys().next_back()?))
    }

    fn conform(&self, mut b: Box3D) -> Result<Box3D> {
        b.validate()?;
        if b.track_id != self.track_id || b.class_label != self.class_label {
            return Err(Error::InvalidInput(format!(
                "box belongs to track {} ({}), not {} ({})",
                b.track_id, b.class_label, self.track_id, self.class_label
            )));
        }
        b.is_keyframe = true;
        Ok(b)
    }

    /// Adds a new keyframe; fails if one already exists at that frame.
    pub fn insert_keyframe(&mut self, b: Box3D) -> Result<()> {
        if self.keyframes.contains_key(&b.frame_index) {
            return Err(Error::TrackConflict { track: self.track_id.0, frame: b.frame_index });
        }
        let b = self.conform(b)?;
        self.keyframes.insert(b.frame_index, b);
        Ok(())
    }

    /// Inserts or overwrites the keyframe at `b.frame_index`.
    pub fn upsert_keyframe(&mut self, b: Box3D) -> Result<()> {
        let b = self.conform(b)?;
        self.keyframes.insert(b.frame_index, b);
        Ok(())
    }

    pub fn remove_keyframe(&mut self, frame: u32) -> Option<Box3D> {
        self.keyframes.remove(&frame)
    }

    /// Copies the keyframe at `source_frame` to `target_frame` and stores it.
    pub fn copy_keyframe(&mut self, source_frame: u32, target_frame: u32) -> Result<&Box3D> {
        let source = self.keyframes.get(&source_frame).ok_or_else(|| Error::NotFound {
            kind: "keyframe",
            id: format!("{}/{source_frame}", self.track_id),
        })?;
        let copy = copy_box(self, source, target_frame)?;
        self.keyframes.insert(target_frame, copy);
        Ok(&self.keyframes[&target_frame])
    }

    /// Renames the class of every keyframe.
    pub fn set_class_label(&mut self, label: impl Into<String>) {
        self.class_label = label.into();
        for b in self.keyframes.values_mut() {
            b.class_label = self.class_label.clone();
        }
    }
}

/// Duplicates `source` into `target_frame` as a new keyframe of `track`.
pub fn copy_box(track: &BoxTrack, source: &Box3D, target_frame: u32) -> Result<Box3D> {
    if track.keyframes.contains_key(&target_frame) {
        return Err(Error::TrackConflict { track: track.track_id.0, frame: target_frame });
    }
    Ok(Box3D { frame_index: target_frame, is_keyframe: true, ..source.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(frame: u32) -> Box3D {
        Box3D::new(
            TrackId(7),
            "person",
            frame,
            Vector3::new(1.0, 2.0, 3.0),
            Vector3::new(0.5, 1.8, 0.4),
            Quat::from_axis_angle(Vector3::z(), 0.3),
        )
    }

    #[test]
    fn copy_preserves_parameters() {
        let mut track = BoxTrack::from_keyframes(TrackId(7), "person", [sample(0)]).unwrap();
        let copy = track.copy_keyframe(0, 40).unwrap().clone();
        let src = track.keyframe(0).unwrap();
        assert_eq!(copy.center, src.center);
        assert_eq!(copy.size, src.size);
        assert_eq!(copy.orientation, src.orientation);
        assert_eq!(copy.frame_index, 40);
        assert!(copy.is_keyframe);
    }

    #[test]
    fn copy_onto_existing_keyframe_conflicts() {
        let mut track = BoxTrack::from_keyframes(TrackId(7), "person", [sample(0)]).unwrap();
        assert!(matches!(track.copy_keyframe(0, 0), Err(Error::TrackConflict { .. })));
    }

    #[test]
    fn editing_a_copy_leaves_the_source() {
        let mut track = BoxTrack::from_keyframes(TrackId(7), "person", [sample(0)]).unwrap();
        let mut copy = track.copy_keyframe(0, 5).unwrap().clone();
        copy.center.x += 10.0;
        track.upsert_keyframe(copy).unwrap();
        assert_eq!(track.keyframe(0).unwrap().center.x, 1.0);
        assert_eq!(track.keyframe(5).unwrap().center.x, 11.0);
    }

    #[test]
    fn keyframes_are_frame_ordered() {
        let track =
            BoxTrack::from_keyframes(TrackId(7), "person", [sample(9), sample(2), sample(5)]).unwrap();
        let frames: Vec<u32> = track.keyframes().map(|b| b.frame_index).collect();
        assert_eq!(frames, vec![2, 5, 9]);
        assert_eq!(track.frame_span(), Some((2, 9)));
    }

    #[test]
    fn rejects_invalid_boxes() {
        let mut track = BoxTrack::new(TrackId(7), "person");
        let mut b = sample(0);
        b.size.y = 0.0;
        assert!(matches!(track.insert_keyframe(b), Err(Error::NonPositiveSize)));
        let mut b = sample(0);
        b.occlusion = 1.5;
        assert!(matches!(track.insert_keyframe(b), Err(Error::OutOfRange { .. })));
        let mut b = sample(0);
        b.track_id = TrackId(8);
        assert!(track.insert_keyframe(b).is_err());
    }

    #[test]
    fn corners_of_axis_aligned_box() {
        let b = Box3D::new(TrackId(1), "c", 0, Vector3::zeros(), Vector3::new(2.0, 4.0, 6.0), Quat::IDENTITY);
        let c = b.corners();
        assert_eq!(c[0], Vector3::new(-1.0, -2.0, -3.0));
        assert_eq!(c[7], Vector3::new(1.0, 2.0, 3.0));
        for (a, b) in BOX_EDGES {
            assert_eq!((c[a] - c[b]).iter().filter(|v| **v != 0.0).count(), 1);
        }
    }
}
