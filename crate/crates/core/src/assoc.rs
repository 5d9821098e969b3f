//! Appearance-only tracker: per-track embedding galleries, a cosine gate, and
//! a freshness-ordered matching cascade over the keyframe grid.
//!
//! On grids as sparse as one keyframe per second, motion extrapolation breaks
//! down — objects move too far between frames for predicted boxes to overlap
//! reality. This tracker therefore ignores geometry entirely: detections are
//! linked to tracks purely by the cosine distance between their appearance
//! embedding and the track's gallery of recent member embeddings.
//!
//! Key behaviors:
//!
//! * **Gallery matching** — a track keeps its last `gallery_budget` member
//!   embeddings; the distance to a detection is the minimum cosine distance
//!   over the gallery (nearest-neighbor), so appearance changes don't inflate
//!   the distance the way a running mean would.
//! * **Matching cascade** — tracks are matched in groups of ascending miss
//!   count: tracks seen most recently get first claim on detections, staler
//!   tracks compete only for what remains. A config flag collapses this to a
//!   single global assignment for ablation.
//! * **Immediate birth, eventual retirement** — every unmatched detection
//!   starts a new track on the spot (no probation period; singleton tracks
//!   are emitted, since track-level recall rewards keeping them), and a track
//!   unmatched for more than `max_age` consecutive keyframes retires. Retired
//!   tracks are never revived here — re-linking across long gaps is the
//!   post-association stage's job.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::assign::{cosine_distance, solve_assignment, CostMatrix};
use crate::error::Error;
use crate::model::{Detection, Embedding, EmbeddingStore, SequenceDataset, Track, TrackMember};
use crate::Result;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// Tuning knobs of the appearance tracker.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssocConfig {
    /// Cosine-distance gate: a track/detection pair farther apart than this
    /// can never match. Must lie in `(0, 2]`.
    pub max_cosine_distance: f64,
    /// Number of recent member embeddings a track's gallery retains (≥ 1).
    pub gallery_budget: usize,
    /// Consecutive unmatched keyframes a track survives before retiring.
    pub max_age: usize,
    /// Detections scoring below this floor are ignored entirely.
    pub min_score: f64,
    /// Restrict matching to equal category ids.
    pub category_gated: bool,
    /// Match fresher tracks first (ascending miss count); `false` runs one
    /// global assignment instead.
    pub cascade: bool,
}

impl Default for AssocConfig {
    fn default() -> Self {
        AssocConfig {
            max_cosine_distance: 0.4,
            gallery_budget: 30,
            max_age: 10,
            min_score: 0.0,
            category_gated: true,
            cascade: true,
        }
    }
}

impl AssocConfig {
    /// Checks every field's domain.
    pub fn validate(&self) -> Result<()> {
        if !self.max_cosine_distance.is_finite()
            || self.max_cosine_distance <= 0.0
            || self.max_cosine_distance > 2.0
        {
            return Err(Error::spec(format!(
                "max_cosine_distance {} outside (0, 2]",
                self.max_cosine_distance
            )));
        }
        if self.gallery_budget == 0 {
            return Err(Error::spec("gallery_budget must be >= 1"));
        }
        if !self.min_score.is_finite() || !(0.0..=1.0).contains(&self.min_score) {
            return Err(Error::spec(format!(
                "min_score {} outside [0, 1]",
                self.min_score
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// TrackState
// ---------------------------------------------------------------------------

/// A live track during association: the track under construction plus its
/// appearance gallery and staleness counters.
#[derive(Debug, Clone)]
pub struct TrackState {
    /// The track being built.
    pub track: Track,
    /// Ring buffer of the most recent member embeddings (≤ gallery budget).
    pub gallery: VecDeque<Embedding>,
    /// Keyframe index of the most recent member.
    pub last_seen: usize,
    /// Consecutive keyframes without a match.
    pub misses: usize,
}

impl TrackState {
    /// Starts a track from one detection and its embedding.
    fn born(track_id: u64, det: &Detection, embedding: Embedding) -> Result<Self> {
        let mut track = Track::new(track_id, det.video_id, det.category_id);
        track.push_member(member_of(det), Some(embedding.clone()))?;
        let mut gallery = VecDeque::with_capacity(1);
        gallery.push_back(embedding);
        Ok(TrackState {
            track,
            gallery,
            last_seen: det.frame_index,
            misses: 0,
        })
    }

    /// Appends a matched detection, refreshing the gallery and counters.
    fn record_match(&mut self, det: &Detection, embedding: Embedding, budget: usize) -> Result<()> {
        self.track
            .push_member(member_of(det), Some(embedding.clone()))?;
        self.gallery.push_back(embedding);
        while self.gallery.len() > budget {
            self.gallery.pop_front();
        }
        self.last_seen = det.frame_index;
        self.misses = 0;
        Ok(())
    }
}

fn member_of(det: &Detection) -> TrackMember {
    TrackMember {
        frame_index: det.frame_index,
        det_id: det.det_id,
        bbox: det.bbox,
        det_score: det.score,
    }
}

/// Nearest-neighbor cosine distance from a track's gallery to an embedding.
///
/// # Errors
///
/// [`Error::EmptyGallery`] when the gallery holds nothing to compare against.
pub fn gallery_distance(state: &TrackState, embedding: &Embedding) -> Result<f64> {
    if state.gallery.is_empty() {
        return Err(Error::EmptyGallery {
            track_id: state.track.track_id(),
        });
    }
    let mut best = f64::INFINITY;
    for g in &state.gallery {
        best = best.min(cosine_distance(g, embedding)?);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Frame association
// ---------------------------------------------------------------------------

/// Outcome of associating one keyframe's detections against the live tracks.
///
/// All three lists hold indices into the slices passed to
/// [`associate_frame`]; each is sorted ascending (matches by track index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameAssociation {
    /// Matched `(track index, detection index)` pairs.
    pub matches: Vec<(usize, usize)>,
    /// Track indices that received no detection.
    pub unmatched_tracks: Vec<usize>,
    /// Detection indices no track claimed.
    pub unmatched_dets: Vec<usize>,
}

/// Matches one keyframe's detections to the live tracks by appearance.
///
/// Cost between a track and a detection is the gallery distance where the
/// categories agree (when gated) and the distance passes the cosine gate;
/// every other pair is infeasible. With the cascade enabled, tracks are
/// grouped by ascending miss count and each group is assigned against the
/// detections still unclaimed by fresher groups.
///
/// # Errors
///
/// [`Error::MissingEmbedding`] when a detection carries no embedding
/// reference — appearance tracking requires one per detection.
pub fn associate_frame(
    active: &[TrackState],
    dets: &[&Detection],
    store: &EmbeddingStore,
    cfg: &AssocConfig,
) -> Result<FrameAssociation> {
    let mut embeddings = Vec::with_capacity(dets.len());
    for det in dets {
        match det.embedding_ref {
            Some(row) => embeddings.push(store.get(row)?),
            None => return Err(Error::MissingEmbedding { det_id: det.det_id }),
        }
    }

    let groups: Vec<Vec<usize>> = if cfg.cascade {
        let mut by_misses: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, state) in active.iter().enumerate() {
            by_misses.entry(state.misses).or_default().push(i);
        }
        by_misses.into_values().collect()
    } else {
        vec![(0..active.len()).collect()]
    };

    let mut remaining: Vec<usize> = (0..dets.len()).collect();
    let mut matches = Vec::new();
    for group in groups {
        if group.is_empty() || remaining.is_empty() {
            continue;
        }
        let mut cost = CostMatrix::new(group.len(), remaining.len());
        for (r, &ti) in group.iter().enumerate() {
            let state = &active[ti];
            for (c, &di) in remaining.iter().enumerate() {
                if cfg.category_gated && state.track.category_id() != dets[di].category_id {
                    continue;
                }
                let dist = gallery_distance(state, &embeddings[di])?;
                if dist <= cfg.max_cosine_distance {
                    cost.set(r, c, dist);
                }
            }
        }
        let pairs = solve_assignment(&cost);
        let claimed: BTreeSet<usize> = pairs.iter().map(|&(_, c)| c).collect();
        for &(r, c) in &pairs {
            matches.push((group[r], remaining[c]));
        }
        remaining = remaining
            .iter()
            .enumerate()
            .filter(|(pos, _)| !claimed.contains(pos))
            .map(|(_, &di)| di)
            .collect();
    }
    matches.sort_unstable();

    let matched_tracks: BTreeSet<usize> = matches.iter().map(|&(t, _)| t).collect();
    let unmatched_tracks = (0..active.len())
        .filter(|i| !matched_tracks.contains(i))
        .collect();
    Ok(FrameAssociation {
        matches,
        unmatched_tracks,
        unmatched_dets: remaining,
    })
}

// ---------------------------------------------------------------------------
// Full-video tracking
// ---------------------------------------------------------------------------

/// Runs the appearance tracker over every keyframe of one video.
///
/// Track ids start at 1 in creation order and are unique within the video.
/// The output contains every track ever created — singletons included — in
/// ascending id order. Videos share no state, so distinct videos can be
/// tracked concurrently by the caller.
pub fn track_video(
    dataset: &SequenceDataset,
    video_id: u64,
    store: &EmbeddingStore,
    cfg: &AssocConfig,
) -> Result<Vec<Track>> {
    cfg.validate()?;
    let video = dataset.video(video_id)?;
    let mut active: Vec<TrackState> = Vec::new();
    let mut finished: Vec<Track> = Vec::new();
    let mut next_id = 1u64;

    for frame in 0..video.image_ids.len() {
        let dets: Vec<&Detection> = dataset
            .detections_at(video_id, frame)?
            .iter()
            .filter(|d| d.score >= cfg.min_score)
            .collect();
        let assoc = associate_frame(&active, &dets, store, cfg)?;

        for &(ti, di) in &assoc.matches {
            let det = dets[di];
            let row = det.embedding_ref.expect("checked in associate_frame");
            active[ti].record_match(det, store.get(row)?, cfg.gallery_budget)?;
        }
        let mut retiring = Vec::new();
        for &ti in &assoc.unmatched_tracks {
            active[ti].misses += 1;
            if active[ti].misses > cfg.max_age {
                retiring.push(ti);
            }
        }
        for ti in retiring.into_iter().rev() {
            finished.push(active.remove(ti).track);
        }
        for &di in &assoc.unmatched_dets {
            let det = dets[di];
            let row = det.embedding_ref.expect("checked in associate_frame");
            active.push(TrackState::born(next_id, det, store.get(row)?)?);
            next_id += 1;
        }
    }

    finished.extend(active.into_iter().map(|s| s.track));
    finished.sort_by_key(|t| t.track_id());
    Ok(finished)
}

// ===========================================================================
// Tests
// ===========================================================================
