//! Whole-sequence comparison of a user annotation set against ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::boxes::evaluate_box_pair;
use super::masks::evaluate_mask_pair;
use crate::bbox::model::{Box3D, TrackId};
use crate::error::{Error, Result};
use crate::segmentation::mask::{InstanceMask, Modality};

/// Dense annotations of one sequence: a box per (track, frame) and instance masks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub boxes: Vec<Box3D>,
    pub masks: Vec<InstanceMask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMatch {
    pub user_track: TrackId,
    pub truth_track: TrackId,
    /// Frames where both tracks have a box.
    pub frames: usize,
    pub by_id: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub ase: f64,
    pub ate: f64,
    pub aoe: f64,
    pub coverage: f64,
    pub matched: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSummary {
    pub mae: f64,
    pub iou: f64,
    pub coverage: f64,
    pub matched: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEval {
    pub boxes: Option<BoxSummary>,
    pub masks: Option<MaskSummary>,
    pub matches: Vec<TrackMatch>,
}

type TrackFrames<'a> = BTreeMap<TrackId, BTreeMap<u32, &'a Box3D>>;

fn by_track(boxes: &[Box3D]) -> TrackFrames<'_> {
    let mut out: TrackFrames<'_> = BTreeMap::new();
    for b in boxes {
        out.entry(b.track_id).or_default().insert(b.frame_index, b);
    }
    out
}

/// Shared track ids first, then greedy pairing by mean center distance over the
/// frames both tracks cover.
pub fn match_tracks(user: &[Box3D], truth: &[Box3D]) -> Vec<TrackMatch> {
    let (u, t) = (by_track(user), by_track(truth));
    let common = |a: &BTreeMap<u32, &Box3D>, b: &BTreeMap<u32, &Box3D>| {
        a.keys().filter(|f| b.contains_key(f)).count()
    };
    let mut matches = Vec::new();
    let mut free_user: BTreeSet<TrackId> = BTreeSet::new();
    let mut free_truth: BTreeSet<TrackId> = t.keys().copied().collect();
    for (id, frames) in &u {
        match t.get(id) {
            Some(tf) => {
                matches.push(TrackMatch { user_track: *id, truth_track: *id, frames: common(frames, tf), by_id: true });
                free_truth.remove(id);
            }
            None => {
                free_user.insert(*id);
            }
        }
    }
    let mut candidates: Vec<(f64, TrackId, TrackId, usize)> = Vec::new();
    for uid in &free_user {
        for tid in &free_truth {
            let (uf, tf) = (&u[uid], &t[tid]);
            let shared: Vec<f64> =
                uf.iter().filter_map(|(f, ub)| tf.get(f).map(|tb| (ub.center - tb.center).norm())).collect();
            if !shared.is_empty() {
                let mean = shared.iter().sum::<f64>() / shared.len() as f64;
                candidates.push((mean, *uid, *tid, shared.len()));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, uid, tid, frames) in candidates {
        if free_user.contains(&uid) && free_truth.contains(&tid) {
            free_user.remove(&uid);
            free_truth.remove(&tid);
            matches.push(TrackMatch { user_track: uid, truth_track: tid, frames, by_id: false });
        }
    }
    matches.sort_by_key(|m| m.truth_track);
    matches
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Averages box and mask metrics over matched pairs and reports coverage.
///
/// Box pairs are matched per (track, frame) through [`match_tracks`]; mask instances
/// follow the same track correspondence within each (frame, modality).
pub fn evaluate_dataset(user: &AnnotationSet, truth: &AnnotationSet) -> Result<DatasetEval> {
    if truth.boxes.is_empty() && truth.masks.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let matches = match_tracks(&user.boxes, &truth.boxes);

    let boxes = if truth.boxes.is_empty() {
        None
    } else {
        let (u, t) = (by_track(&user.boxes), by_track(&truth.boxes));
        let (mut ates, mut ases, mut aoes) = (Vec::new(), Vec::new(), Vec::new());
        for m in &matches {
            for (f, ub) in &u[&m.user_track] {
                if let Some(tb) = t[&m.truth_track].get(f) {
                    let e = evaluate_box_pair(ub, tb)?;
                    ates.push(e.ate);
                    ases.push(e.ase);
                    aoes.push(e.aoe);
                }
            }
        }
        let (matched, total) = (ates.len(), truth.boxes.len());
        let avg = |v: &[f64]| if v.is_empty() { f64::NAN } else { mean(v) };
        Some(BoxSummary {
            ase: avg(&ases),
            ate: avg(&ates),
            aoe: avg(&aoes),
            coverage: matched as f64 / total as f64,
            matched,
            total,
        })
    };

    let masks = if truth.masks.is_empty() {
        None
    } else {
        let to_truth: BTreeMap<u32, u32> = matches.iter().map(|m| (m.user_track.0, m.truth_track.0)).collect();
        let truth_ids: BTreeSet<u32> = truth.boxes.iter().map(|b| b.track_id.0).collect();
        let index: BTreeMap<(u32, Modality, u32), &InstanceMask> =
            truth.masks.iter().map(|m| ((m.frame_index, m.modality, m.instance_id), m)).collect();
        let (mut ious, mut maes) = (Vec::new(), Vec::new());
        let mut used = BTreeSet::new();
        for um in &user.masks {
            // Instances tied to a user-only track map through the box correspondence.
            let id = match to_truth.get(&um.instance_id) {
                Some(&t) => t,
                None if truth_ids.contains(&um.instance_id) => continue,
                None => um.instance_id,
            };
            let key = (um.frame_index, um.modality, id);
            if let Some(tm) = index.get(&key) {
                if used.insert(key) {
                    let e = evaluate_mask_pair(&um.mask, &tm.mask)?;
                    ious.push(e.iou);
                    maes.push(e.mae);
                }
            }
        }
        let (matched, total) = (ious.len(), truth.masks.len());
        let avg = |v: &[f64]| if v.is_empty() { f64::NAN } else { mean(v) };
        Some(MaskSummary { mae: avg(&maes), iou: avg(&ious), coverage: matched as f64 / total as f64, matched, total })
    };

    Ok(DatasetEval { boxes, masks, matches })
}

impl DatasetEval {
    /// Fixed-width text table with box and mask columns.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>10} {:>10} {:>10} {:>10}", "boxes", "ASE", "ATE [m]", "AOE [rad]", "Coverage");
        match &self.boxes {
            Some(b) => {
                let _ = writeln!(s, "{:<8} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", "", b.ase, b.ate, b.aoe, b.coverage);
            }
            None => {
                let _ = writeln!(s, "{:<8} {:>10}", "", "n/a");
            }
        }
        let _ = writeln!(s, "{:<8} {:>10} {:>10} {:>10}", "masks", "MAE", "IoU", "Coverage");
        match &self.masks {
            Some(m) => {
                let _ = writeln!(s, "{:<8} {:>10.4} {:>10.4} {:>10.4}", "", m.mae, m.iou, m.coverage);
            }
            None => {
                let _ = writeln!(s, "{:<8} {:>10}", "", "n/a");
            }
        }
        s
    }
}
