//! Offline post-processing over finished track sets: tracklet re-linking
//! through mean-appearance features, ensemble fusion of two result sets,
//! feature concatenation for dual-embedding runs, and category filtering.
//!
//! Everything in this module is deterministic: candidate selection always
//! breaks ties on a fully ordered key, so equal inputs produce byte-equal
//! outputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;
use crate::eval::box_map_iou;
use crate::model::{Detection, Embedding, EmbeddingStore, GroundTruthTrack, SequenceDataset, Track};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Configuration for [`post_associate`], the offline tracklet re-linker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaConfig {
    /// Largest cosine distance between two tracklet mean embeddings that
    /// still allows a merge. `0.0` effectively disables re-linking (only
    /// exactly identical means would merge).
    pub similarity_threshold: f64,
    /// Largest allowed keyframe gap between the end of the earlier tracklet
    /// and the start of the later one; adjacent keyframes have gap 1.
    /// `None` places no limit.
    pub max_gap: Option<usize>,
    /// When `true`, only tracklets of the same category may merge.
    pub require_same_category: bool,
}

impl Default for PaConfig {
    fn default() -> Self {
        PaConfig {
            similarity_threshold: 0.3,
            max_gap: None,
            require_same_category: true,
        }
    }
}

impl PaConfig {
    /// Checks field domains: the threshold must be finite and in `[0, 2)`.
    pub fn validate(&self) -> Result<()> {
        if !self.similarity_threshold.is_finite()
            || !(0.0..2.0).contains(&self.similarity_threshold)
        {
            return Err(Error::spec(format!(
                "similarity_threshold {} outside [0, 2)",
                self.similarity_threshold
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Embedding concatenation
// ---------------------------------------------------------------------------

/// Joins two unit embeddings into one unit embedding of dimension
/// `a.dim() + b.dim()` by scaling each half with `1/sqrt(2)`.
///
/// The construction preserves similarity structure exactly: the dot product
/// of two concatenated embeddings equals the arithmetic mean of the two
/// per-half dot products.
///
/// # Errors
///
/// Only if numeric drift leaves the result outside the unit tolerance,
/// which is not reachable for valid inputs.
pub fn concat_embeddings(a: &Embedding, b: &Embedding) -> Result<Embedding> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut values = Vec::with_capacity(a.dim() + b.dim());
    values.extend(a.values().iter().map(|v| v * scale));
    values.extend(b.values().iter().map(|v| v * scale));
    Embedding::from_unit(values)
}

/// Row-wise [`concat_embeddings`] over two stores describing the same
/// detections in the same order.
///
/// # Errors
///
/// [`Error::Ref`] when the stores disagree on row count — rows must pair up
/// one to one.
pub fn concat_stores(a: &EmbeddingStore, b: &EmbeddingStore) -> Result<EmbeddingStore> {
    if a.len() != b.len() {
        return Err(Error::reference(format!(
            "cannot concatenate embedding stores with {} and {} rows",
            a.len(),
            b.len()
        )));
    }
    let dim = a.dim() + b.dim();
    let mut rows = Vec::with_capacity(a.len() * dim);
    for row in 0..a.len() {
        let joined = concat_embeddings(&a.get(row)?, &b.get(row)?)?;
        rows.extend_from_slice(joined.values());
    }
    if rows.is_empty() {
        return Ok(EmbeddingStore::empty());
    }
    EmbeddingStore::from_unit_rows(dim, rows)
}

// ---------------------------------------------------------------------------
// Embedding re-attachment
// ---------------------------------------------------------------------------

/// Re-attaches member embeddings to tracks whose members reference
/// detections of `dataset`, looked up by detection id.
///
/// Members with detection id `0` (unknown provenance) or whose detection
/// carries no embedding are left as they are. Used to rebuild mean features
/// after reading a result file back from disk.
///
/// # Errors
///
/// Propagates store access failures for out-of-range embedding rows.
pub fn attach_embeddings(
    tracks: Vec<Track>,
    dataset: &SequenceDataset,
    store: &EmbeddingStore,
) -> Result<Vec<Track>> {
    let by_det_id: HashMap<u64, &Detection> = dataset
        .all_detections()
        .map(|det| (det.det_id, det))
        .collect();
    let mut out = Vec::with_capacity(tracks.len());
    for mut track in tracks {
        for index in 0..track.members().len() {
            let det_id = track.members()[index].det_id;
            if det_id == 0 || track.member_embedding(index).is_some() {
                continue;
            }
            let Some(det) = by_det_id.get(&det_id) else {
                continue;
            };
            if let Some(row) = det.embedding_ref {
                track.attach_member_embedding(index, store.get(row)?)?;
            }
        }
        out.push(track);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Post association
// ---------------------------------------------------------------------------

/// Candidate merge between two time-disjoint tracklets of one video.
struct MergeCandidate {
    distance: f64,
    earlier_start: usize,
    earlier_id: u64,
    later_start: usize,
    later_id: u64,
    earlier_slot: usize,
    later_slot: usize,
}

impl MergeCandidate {
    /// Full ordering key: distance first, then earliest start frame and
    /// smallest track id of both sides, so the greedy pick is unique.
    fn key(&self) -> (f64, usize, u64, usize, u64) {
        (
            self.distance,
            self.earlier_start,
            self.earlier_id,
            self.later_start,
            self.later_id,
        )
    }

    fn beats(&self, other: &MergeCandidate) -> bool {
        let (d1, s1, i1, t1, j1) = self.key();
        let (d2, s2, i2, t2, j2) = other.key();
        (d1, s1, i1, t1, j1) < (d2, s2, i2, t2, j2)
    }
}

/// Greedily re-links time-disjoint tracklets whose mean embeddings are
/// within `similarity_threshold` cosine distance, repeating until no pair
/// qualifies.
///
/// * Only pairs where one tracklet ends strictly before the other starts
///   are candidates; the keyframe gap between them must not exceed
///   `max_gap`, and categories must agree when `require_same_category`.
/// * Each round merges the single best candidate — smallest distance, ties
///   broken by earlier start frame and smaller track id — then recomputes
///   the merged tracklet's mean embedding before the next round.
/// * The merged tracklet keeps the earlier tracklet's id (and category).
///
/// Tracks from several videos may be passed together; videos never mix and
/// are processed independently. Output is sorted by `(video_id, track_id)`.
///
/// # Errors
///
/// [`Error::MissingMeanEmbedding`] when any non-empty input track carries no
/// member embeddings; re-attach them first when tracks come from disk.
pub fn post_associate(tracks: Vec<Track>, config: &PaConfig) -> Result<Vec<Track>> {
    config.validate()?;
    let mut by_video: BTreeMap<u64, Vec<Track>> = BTreeMap::new();
    for track in tracks {
        by_video.entry(track.video_id()).or_default().push(track);
    }
    let mut out = Vec::new();
    for (_, group) in by_video {
        out.extend(post_associate_video(group, config)?);
    }
    Ok(out)
}

/// One-video greedy fixpoint; see [`post_associate`].
fn post_associate_video(tracks: Vec<Track>, config: &PaConfig) -> Result<Vec<Track>> {
    let mut slots: Vec<Option<Track>> = tracks.into_iter().map(Some).collect();
    let mut means: Vec<Option<Embedding>> = Vec::with_capacity(slots.len());
    for slot in &slots {
        let track = slot.as_ref().expect("slot filled at construction");
        means.push(Some(track_mean(track)?));
    }

    loop {
        let mut best: Option<MergeCandidate> = None;
        for i in 0..slots.len() {
            let Some(first) = slots[i].as_ref() else {
                continue;
            };
            for j in 0..slots.len() {
                if i == j {
                    continue;
                }
                let Some(second) = slots[j].as_ref() else {
                    continue;
                };
                // Orient the pair: `first` must end strictly before
                // `second` starts. The reverse orientation is covered when
                // the loop visits (j, i).
                if first.is_empty() || second.is_empty() {
                    continue;
                }
                if first.end_frame() >= second.start_frame() {
                    continue;
                }
                let gap = second.start_frame() - first.end_frame();
                if config.max_gap.is_some_and(|limit| gap > limit) {
                    continue;
                }
                if config.require_same_category && first.category_id() != second.category_id() {
                    continue;
                }
                let mean_a = means[i].as_ref().expect("mean cached for live slot");
                let mean_b = means[j].as_ref().expect("mean cached for live slot");
                let distance = 1.0 - mean_a.dot(mean_b)?;
                if distance > config.similarity_threshold {
                    continue;
                }
                let candidate = MergeCandidate {
                    distance,
                    earlier_start: first.start_frame(),
                    earlier_id: first.track_id(),
                    later_start: second.start_frame(),
                    later_id: second.track_id(),
                    earlier_slot: i,
                    later_slot: j,
                };
                if best.as_ref().is_none_or(|b| candidate.beats(b)) {
                    best = Some(candidate);
                }
            }
        }
        let Some(winner) = best else {
            break;
        };
        let later = slots[winner.later_slot]
            .take()
            .expect("winner references live slot");
        means[winner.later_slot] = None;
        let earlier = slots[winner.earlier_slot]
            .as_mut()
            .expect("winner references live slot");
        earlier.absorb(later)?;
        means[winner.earlier_slot] = Some(track_mean(earlier)?);
    }

    let mut merged: Vec<Track> = slots.into_iter().flatten().collect();
    merged.sort_by_key(|t| t.track_id());
    Ok(merged)
}

/// Mean embedding of a track, with the missing-embedding case reported as
/// [`Error::MissingMeanEmbedding`].
fn track_mean(track: &Track) -> Result<Embedding> {
    track.mean_embedding().map_err(|err| match err {
        Error::NoEmbeddings { track_id } => Error::MissingMeanEmbedding { track_id },
        other => other,
    })
}

// ---------------------------------------------------------------------------
// Ensemble fusion
// ---------------------------------------------------------------------------

/// Merges two track sets produced from the same dataset into one.
///
/// Set `a` keeps its track ids; every id in set `b` is shifted by
/// `max_id(a) + 1` so the ranges stay disjoint (when `a` is empty, `b`
/// passes through unchanged). With `dedup_iou` unset the result is the
/// plain union. With `dedup_iou = Some(t)`, near-duplicate pairs — same
/// video, same category, spatio-temporal box-map overlap `>= t` — keep only
/// the higher-scoring track (ties keep the smaller id after remapping).
///
/// Output is sorted by `(video_id, track_id)`.
///
/// # Errors
///
/// [`Error::Spec`] when `dedup_iou` lies outside `(0, 1]`.
pub fn merge_ensembles(
    a: Vec<Track>,
    b: Vec<Track>,
    dedup_iou: Option<f64>,
) -> Result<Vec<Track>> {
    if let Some(threshold) = dedup_iou {
        if !threshold.is_finite() || !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::spec(format!(
                "dedup_iou {threshold} outside (0, 1]"
            )));
        }
    }
    let offset = a
        .iter()
        .map(Track::track_id)
        .max()
        .map_or(0, |max_id| max_id + 1);
    let mut union = a;
    for mut track in b {
        track.set_track_id(track.track_id() + offset);
        union.push(track);
    }

    if let Some(threshold) = dedup_iou {
        union = suppress_duplicates(union, threshold);
    }
    union.sort_by_key(|t| (t.video_id(), t.track_id()));
    Ok(union)
}

/// Greedy non-maximum suppression over whole tracks: visit by descending
/// score and drop any track overlapping an already kept same-video,
/// same-category track by at least `threshold`.
fn suppress_duplicates(tracks: Vec<Track>, threshold: f64) -> Vec<Track> {
    let mut ordered = tracks;
    ordered.sort_by(|x, y| {
        y.score()
            .partial_cmp(&x.score())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.video_id().cmp(&y.video_id()))
            .then(x.track_id().cmp(&y.track_id()))
    });
    let mut kept: Vec<(Track, BTreeMap<u64, crate::model::BoundingBox>)> = Vec::new();
    'candidates: for track in ordered {
        let boxes = track.boxes_by_frame();
        for (other, other_boxes) in &kept {
            if other.video_id() == track.video_id()
                && other.category_id() == track.category_id()
                && box_map_iou(&boxes, other_boxes) >= threshold
            {
                continue 'candidates;
            }
        }
        kept.push((track, boxes));
    }
    kept.into_iter().map(|(track, _)| track).collect()
}

// ---------------------------------------------------------------------------
// Category filtering
// ---------------------------------------------------------------------------

/// Anything carrying a category label; lets [`filter_categories`] work on
/// detections and tracks alike.
pub trait Categorized {
    /// The item's category id.
    fn category_id(&self) -> u64;
}

impl Categorized for Detection {
    fn category_id(&self) -> u64 {
        self.category_id
    }
}

impl Categorized for Track {
    fn category_id(&self) -> u64 {
        Track::category_id(self)
    }
}

impl Categorized for GroundTruthTrack {
    fn category_id(&self) -> u64 {
        self.category_id
    }
}

/// Keeps only items whose category is in `whitelist`, preserving order.
///
/// # Errors
///
/// [`Error::EmptyWhitelist`] when the whitelist has no entries — an empty
/// filter is always a configuration mistake, not a request for nothing.
pub fn filter_categories<T: Categorized>(
    items: Vec<T>,
    whitelist: &BTreeSet<u64>,
) -> Result<Vec<T>> {
    if whitelist.is_empty() {
        return Err(Error::EmptyWhitelist);
    }
    Ok(items
        .into_iter()
        .filter(|item| whitelist.contains(&item.category_id()))
        .collect())
}

// ===========================================================================
// Tests
// ===========================================================================
