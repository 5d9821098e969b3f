//! Track-level evaluation: spatio-temporal track IoU, per-category track mAP,
//! and the detection-oracle upper bound.
//!
//! The metric is ranking-based: per category, predicted tracks are sorted by
//! score and greedily matched to unclaimed ground-truth tracks with track IoU
//! at or above the threshold; the resulting TP/FP labels feed a 101-point
//! interpolated precision/recall curve; mAP averages the per-category APs
//! over every category that has at least one ground-truth track.
//!
//! **Federation note**: a category is evaluated only over videos where it has
//! ground-truth tracks. Predictions for that category in any other video are
//! ignored entirely — they count neither as true nor as false positives. This
//! deliberately simplified protocol (no per-video exhaustiveness metadata)
//! preserves all directional comparisons on synthetic data.
//!
//! The oracle mode replaces tracking with per-keyframe assignment of
//! detections to ground-truth boxes, yielding the best track set achievable
//! from a given detection stream: an upper bound for any tracker run on the
//! same detections. Detections no ground-truth box claims survive as
//! singleton tracks, so the bound still reflects detector false positives.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::assign::{iou, solve_assignment, CostMatrix};
use crate::error::Error;
use crate::model::{BoundingBox, GroundTruthTrack, SequenceDataset, Track, TrackMember};
use crate::Result;

/// IoU gate for oracle detection-to-ground-truth assignment.
pub const ORACLE_IOU_GATE: f64 = 0.5;

/// Default track IoU threshold for counting a prediction as a true positive.
pub const DEFAULT_IOU_THRESH: f64 = 0.5;

// ---------------------------------------------------------------------------
// Track IoU
// ---------------------------------------------------------------------------

/// Spatio-temporal IoU of two per-frame box maps.
///
/// Sums intersection and union areas over the union of keys; a key where only
/// one side has a box contributes that box's area to the union and nothing to
/// the intersection. Returns 0 when both maps are empty.
pub fn box_map_iou<K: Ord + Copy>(
    a: &BTreeMap<K, BoundingBox>,
    b: &BTreeMap<K, BoundingBox>,
) -> f64 {
    let mut inter = 0.0;
    let mut union = 0.0;
    let keys: BTreeSet<K> = a.keys().chain(b.keys()).copied().collect();
    for key in keys {
        match (a.get(&key), b.get(&key)) {
            (Some(pa), Some(pb)) => {
                let i = pa.intersection(pb);
                inter += i;
                union += pa.area() + pb.area() - i;
            }
            (Some(p), None) | (None, Some(p)) => union += p.area(),
            (None, None) => unreachable!("key came from one of the maps"),
        }
    }
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Track IoU between a predicted track and a ground-truth track.
///
/// # Errors
///
/// [`Error::VideoMismatch`] when the tracks live in different videos.
pub fn track_iou(prediction: &Track, ground_truth: &GroundTruthTrack) -> Result<f64> {
    if prediction.video_id() != ground_truth.video_id {
        return Err(Error::VideoMismatch {
            left: prediction.video_id(),
            right: ground_truth.video_id,
        });
    }
    let gt_boxes: BTreeMap<u64, BoundingBox> = ground_truth
        .boxes()
        .iter()
        .map(|(&frame, &bbox)| (frame as u64, bbox))
        .collect();
    Ok(box_map_iou(&prediction.boxes_by_frame(), &gt_boxes))
}

// ---------------------------------------------------------------------------
// Report types
// ---------------------------------------------------------------------------

/// Evaluation outcome for one category.
#[derive(Debug, Clone, Serialize)]
pub struct CategoryAp {
    pub category_id: u64,
    /// 101-point interpolated average precision, in `[0, 1]`.
    pub ap: f64,
    /// Ground-truth tracks of this category (the recall denominator).
    pub gt_tracks: usize,
    /// Predictions considered after federation filtering.
    pub predictions: usize,
    pub tp: usize,
    pub fp: usize,
}

/// Per-video match diagnostics summed over all evaluated categories.
#[derive(Debug, Clone, Serialize)]
pub struct VideoDiagnostics {
    pub video_id: u64,
    pub tp: usize,
    pub fp: usize,
    /// Ground-truth tracks no prediction claimed.
    pub missed_gt: usize,
}

/// Full evaluation report.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// Mean AP over categories with at least one ground-truth track
    /// (0 when there are none).
    pub map: f64,
    /// Track IoU threshold the report was computed at.
    pub iou_thresh: f64,
    /// True when the predictions came from the detection oracle.
    pub oracle: bool,
    pub per_category: Vec<CategoryAp>,
    pub per_video: Vec<VideoDiagnostics>,
}

impl EvalReport {
    /// Fixed-width text rendering of the report.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str("category        AP  gt_tracks  predictions     TP     FP\n");
        for c in &self.per_category {
            out.push_str(&format!(
                "{:>8}  {:>8.4}  {:>9}  {:>11}  {:>5}  {:>5}\n",
                c.category_id, c.ap, c.gt_tracks, c.predictions, c.tp, c.fp
            ));
        }
        out.push_str(&format!(
            "mAP {:.4}  (track IoU >= {:.2}, {} categories{})\n",
            self.map,
            self.iou_thresh,
            self.per_category.len(),
            if self.oracle { ", oracle" } else { "" }
        ));
        out.push_str("video       TP     FP  missed_gt\n");
        for v in &self.per_video {
            out.push_str(&format!(
                "{:>5}  {:>5}  {:>5}  {:>9}\n",
                v.video_id, v.tp, v.fp, v.missed_gt
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Evaluates predicted tracks against ground truth at one track IoU threshold.
///
/// Per category: predictions are sorted by score descending (ties by video id,
/// then track id, ascending) and each is greedily matched to the unclaimed
/// same-video ground-truth track with the highest track IoU, provided that
/// IoU reaches `iou_thresh` (IoU ties resolve to the lowest ground-truth
/// id). Memberless prediction tracks are skipped. Categories that have ground
/// truth but no predictions contribute an AP of 0.
pub fn evaluate(
    predictions: &[Track],
    ground_truth: &[GroundTruthTrack],
    iou_thresh: f64,
) -> EvalReport {
    let mut gt_by_cat: BTreeMap<u64, Vec<&GroundTruthTrack>> = BTreeMap::new();
    for gt in ground_truth {
        gt_by_cat.entry(gt.category_id).or_default().push(gt);
    }

    let mut diag: BTreeMap<u64, VideoDiagnostics> = BTreeMap::new();
    for gt in ground_truth {
        diag.entry(gt.video_id).or_insert(VideoDiagnostics {
            video_id: gt.video_id,
            tp: 0,
            fp: 0,
            missed_gt: 0,
        });
    }

    let mut per_category = Vec::with_capacity(gt_by_cat.len());
    for (&category_id, gts) in &gt_by_cat {
        let mut gts = gts.clone();
        gts.sort_by_key(|g| g.gt_track_id);
        let gt_videos: BTreeSet<u64> = gts.iter().map(|g| g.video_id).collect();

        let mut preds: Vec<&Track> = predictions
            .iter()
            .filter(|t| {
                !t.is_empty() && t.category_id() == category_id && gt_videos.contains(&t.video_id())
            })
            .collect();
        preds.sort_by(|a, b| {
            b.score()
                .partial_cmp(&a.score())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.video_id().cmp(&b.video_id()))
                .then(a.track_id().cmp(&b.track_id()))
        });

        let mut claimed = vec![false; gts.len()];
        let mut tp_flags = Vec::with_capacity(preds.len());
        for pred in &preds {
            let mut best: Option<(usize, f64)> = None;
            for (i, gt) in gts.iter().enumerate() {
                if claimed[i] || gt.video_id != pred.video_id() {
                    continue;
                }
                let value = track_iou(pred, gt).expect("same video by filter");
                if value >= iou_thresh && best.map_or(true, |(_, b)| value > b) {
                    best = Some((i, value));
                }
            }
            let entry = diag.get_mut(&pred.video_id()).expect("gt video");
            match best {
                Some((i, _)) => {
                    claimed[i] = true;
                    tp_flags.push(true);
                    entry.tp += 1;
                }
                None => {
                    tp_flags.push(false);
                    entry.fp += 1;
                }
            }
        }
        for (i, gt) in gts.iter().enumerate() {
            if !claimed[i] {
                diag.get_mut(&gt.video_id).expect("gt video").missed_gt += 1;
            }
        }

        let tp = tp_flags.iter().filter(|&&f| f).count();
        per_category.push(CategoryAp {
            category_id,
            ap: interpolated_ap(&tp_flags, gts.len()),
            gt_tracks: gts.len(),
            predictions: preds.len(),
            tp,
            fp: preds.len() - tp,
        });
    }

    let map = if per_category.is_empty() {
        0.0
    } else {
        per_category.iter().map(|c| c.ap).sum::<f64>() / per_category.len() as f64
    };
    EvalReport {
        map,
        iou_thresh,
        oracle: false,
        per_category,
        per_video: diag.into_values().collect(),
    }
}

/// 101-point interpolated AP from ranked TP/FP labels.
///
/// At each recall level `k/100` the interpolated precision is the maximum
/// precision among curve points whose recall reaches that level (0 when none
/// does); AP is the mean over the 101 levels.
fn interpolated_ap(tp_flags: &[bool], gt_count: usize) -> f64 {
    if gt_count == 0 {
        return 0.0;
    }
    let mut points = Vec::with_capacity(tp_flags.len());
    let mut tp_cum = 0usize;
    for (j, &is_tp) in tp_flags.iter().enumerate() {
        if is_tp {
            tp_cum += 1;
        }
        points.push((
            tp_cum as f64 / gt_count as f64,
            tp_cum as f64 / (j + 1) as f64,
        ));
    }
    let mut total = 0.0;
    for k in 0..=100u32 {
        let level = f64::from(k) / 100.0;
        let best = points
            .iter()
            .filter(|(recall, _)| *recall >= level)
            .map(|&(_, precision)| precision)
            .fold(0.0, f64::max);
        total += best;
    }
    total / 101.0
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

/// Best-case tracks from per-keyframe assignment of detections to ground
/// truth.
///
/// Per video, per keyframe: detections and ground-truth boxes of the same
/// category are assigned by minimum `1 - IoU`, gated at IoU ≥
/// [`ORACLE_IOU_GATE`]. A matched detection joins the oracle track of its
/// ground-truth identity; unmatched detections survive as singleton tracks,
/// so detector false positives still weigh on the resulting score. Track ids
/// restart at 1 per video: first the ground-truth-derived tracks (ascending
/// ground-truth id), then the singletons (by frame, then detection id).
pub fn oracle_tracks(dataset: &SequenceDataset) -> Result<Vec<Track>> {
    let mut out = Vec::new();
    for video in dataset.videos() {
        let video_id = video.video_id;
        let mut gts: Vec<&GroundTruthTrack> = dataset
            .ground_truth()
            .iter()
            .filter(|g| g.video_id == video_id)
            .collect();
        gts.sort_by_key(|g| g.gt_track_id);

        let mut identity_tracks: Vec<Track> = gts
            .iter()
            .map(|g| Track::new(0, video_id, g.category_id))
            .collect();
        let mut singletons: Vec<Track> = Vec::new();

        for frame in 0..video.image_ids.len() {
            let dets = dataset.detections_at(video_id, frame)?;
            if dets.is_empty() {
                continue;
            }
            let present: Vec<usize> = (0..gts.len())
                .filter(|&i| gts[i].box_at(frame).is_some())
                .collect();
            let mut cost = CostMatrix::new(dets.len(), present.len());
            for (r, det) in dets.iter().enumerate() {
                for (c, &gi) in present.iter().enumerate() {
                    if gts[gi].category_id != det.category_id {
                        continue;
                    }
                    let gt_box = gts[gi].box_at(frame).expect("present by filter");
                    let value = iou(&det.bbox, gt_box);
                    if value >= ORACLE_IOU_GATE {
                        cost.set(r, c, 1.0 - value);
                    }
                }
            }
            let mut matched = vec![false; dets.len()];
            for (r, c) in solve_assignment(&cost) {
                matched[r] = true;
                identity_tracks[present[c]].push_member(member_of(&dets[r]), None)?;
            }
            for (r, det) in dets.iter().enumerate() {
                if !matched[r] {
                    let mut single = Track::new(0, video_id, det.category_id);
                    single.push_member(member_of(det), None)?;
                    singletons.push(single);
                }
            }
        }

        singletons.sort_by_key(|t| (t.start_frame(), t.members()[0].det_id));
        let mut next_id = 1u64;
        for mut track in identity_tracks.into_iter().chain(singletons) {
            if track.is_empty() {
                continue;
            }
            track.set_track_id(next_id);
            next_id += 1;
            out.push(track);
        }
    }
    Ok(out)
}

fn member_of(det: &crate::model::Detection) -> TrackMember {
    TrackMember {
        frame_index: det.frame_index,
        det_id: det.det_id,
        bbox: det.bbox,
        det_score: det.score,
    }
}

// ===========================================================================
// Tests
// ===========================================================================
