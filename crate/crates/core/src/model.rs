//! Core data model: boxes, detections, embeddings, tracks, and datasets.
//!
//! All geometry uses axis-aligned `[x, y, w, h]` boxes in pixel units with the
//! origin at the top-left corner. Appearance embeddings are unit L2-normalized
//! vectors; every constructor that admits an embedding normalizes (or checks)
//! on the way in, so downstream code can rely on cosine similarity being a
//! plain dot product.
//!
//! Identity invariants enforced here:
//!
//! * degenerate boxes (`w <= 0`, `h <= 0`, non-finite) are rejected at
//!   construction, never carried along;
//! * a [`Track`] holds at most one member per frame index, members are kept in
//!   strictly increasing frame order, and its score is always the arithmetic
//!   mean of its members' detection scores;
//! * a track's mean embedding is maintained incrementally as a running sum and
//!   renormalized on demand, which matches a full recomputation to within
//!   floating-point accumulation error.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::Result;

/// Norm threshold below which a vector counts as zero and cannot be normalized.
pub const ZERO_NORM_EPS: f64 = 1e-12;

/// Tolerance within which a stored embedding must be unit length.
pub const UNIT_NORM_TOL: f64 = 1e-4;

// ---------------------------------------------------------------------------
// BoundingBox
// ---------------------------------------------------------------------------

/// Axis-aligned box `[x, y, w, h]` with strictly positive extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting degenerate or non-finite geometry.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("bounding box [{x}, {y}, {w}, {h}]"),
            });
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::spec(format!(
                "degenerate bounding box: w={w}, h={h} (both must be > 0)"
            )));
        }
        Ok(BoundingBox { x, y, w, h })
    }

    /// Box area `w * h`.
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Center of the box.
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Intersection area with another box (0 when disjoint).
    pub fn intersection(&self, other: &BoundingBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            0.0
        } else {
            ix * iy
        }
    }

    /// `[x, y, w, h]` array form, the on-disk layout.
    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }

    /// Builds from the `[x, y, w, h]` array form.
    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        BoundingBox::new(a[0], a[1], a[2], a[3])
    }
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

/// Unit L2-normalized appearance vector.
///
/// The only way to build one is through normalization (or from data already
/// known to be unit length), so cosine similarity reduces to a dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Normalizes `values` to unit L2 norm.
    ///
    /// # Errors
    ///
    /// [`Error::ZeroVector`] when the norm is below [`ZERO_NORM_EPS`];
    /// [`Error::NonFinite`] when any entry is NaN or infinite.
    pub fn normalize(values: &[f64]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("embedding entry {i}"),
            });
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < ZERO_NORM_EPS {
            return Err(Error::ZeroVector);
        }
        Ok(Embedding {
            values: values.iter().map(|v| v / norm).collect(),
        })
    }

    /// Wraps values that are already unit length (within [`UNIT_NORM_TOL`]).
    ///
    /// Used on hot paths (store lookups) to avoid re-normalizing rows that
    /// were normalized at load time.
    pub fn from_unit(values: Vec<f64>) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::spec(format!(
                "embedding is not unit length (|v| = {norm})"
            )));
        }
        Ok(Embedding { values })
    }

    /// Embedding width.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Raw components.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dot product with another embedding of the same width.
    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }
}

// ---------------------------------------------------------------------------
// EmbeddingStore
// ---------------------------------------------------------------------------

/// In-memory table of appearance embeddings addressed by row offset.
///
/// Rows are stored twice: the raw 32-bit floats exactly as read from (or
/// destined for) a sidecar file, and a unit-normalized `f64` copy used for all
/// distance computation. Keeping the raw bytes makes write → read → write
/// round trips byte-identical even for inputs that were not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    raw: Vec<f32>,
    unit: Vec<f64>,
}

impl EmbeddingStore {
    /// Builds a store from raw row-major `f32` data.
    ///
    /// Every row is validated and normalized up front; a zero or non-finite
    /// row aborts construction.
    pub fn from_raw(dim: usize, raw: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::spec("embedding dimension must be >= 1"));
        }
        if raw.len() % dim != 0 {
            return Err(Error::spec(format!(
                "embedding payload of {} floats is not a multiple of dim {dim}",
                raw.len()
            )));
        }
        let count = raw.len() / dim;
        let mut unit = Vec::with_capacity(raw.len());
        for row in 0..count {
            let values: Vec<f64> = raw[row * dim..(row + 1) * dim]
                .iter()
                .map(|&v| v as f64)
                .collect();
            let normalized = Embedding::normalize(&values).map_err(|e| {
                Error::spec(format!("embedding row {row} cannot be normalized: {e}"))
            })?;
            unit.extend_from_slice(normalized.values());
        }
        Ok(EmbeddingStore { dim, raw, unit })
    }

    /// Builds a store from rows that are already unit-normalized `f64`.
    ///
    /// The raw `f32` mirror is derived by rounding; used for in-memory stores
    /// (e.g. concatenated two-model features) that are never written back.
    pub fn from_unit_rows(dim: usize, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::spec("embedding dimension must be >= 1"));
        }
        if rows.len() % dim != 0 {
            return Err(Error::spec(format!(
                "embedding payload of {} floats is not a multiple of dim {dim}",
                rows.len()
            )));
        }
        for (row, chunk) in rows.chunks(dim).enumerate() {
            let norm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::spec(format!(
                    "embedding row {row} is not unit length (|v| = {norm})"
                )));
            }
        }
        let raw = rows.iter().map(|&v| v as f32).collect();
        Ok(EmbeddingStore {
            dim,
            raw,
            unit: rows,
        })
    }

    /// Empty store (no rows, declared width 0).
    pub fn empty() -> Self {
        EmbeddingStore {
            dim: 0,
            raw: Vec::new(),
            unit: Vec::new(),
        }
    }

    /// Embedding width; 0 for an empty store.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.raw.len() / self.dim
        }
    }

    /// True when the store holds no rows.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unit-normalized embedding at `row`.
    pub fn get(&self, row: usize) -> Result<Embedding> {
        if row >= self.len() {
            return Err(Error::reference(format!(
                "embedding offset {row} out of range (store holds {} rows)",
                self.len()
            )));
        }
        Ok(Embedding {
            values: self.unit[row * self.dim..(row + 1) * self.dim].to_vec(),
        })
    }

    /// Raw row-major `f32` payload, exactly as read or ready to be written.
    pub fn raw(&self) -> &[f32] {
        &self.raw
    }
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

/// One detector output box on one keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub det_id: u64,
    pub video_id: u64,
    /// Position on the video's keyframe grid (0-based).
    pub frame_index: usize,
    pub image_id: u64,
    pub bbox: BoundingBox,
    pub category_id: u64,
    pub score: f64,
    /// Row offset into the dataset's [`EmbeddingStore`], when present.
    pub embedding_ref: Option<usize>,
}

impl Detection {
    /// Validates the score domain; geometry is validated by [`BoundingBox`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        det_id: u64,
        video_id: u64,
        frame_index: usize,
        image_id: u64,
        bbox: BoundingBox,
        category_id: u64,
        score: f64,
        embedding_ref: Option<usize>,
    ) -> Result<Self> {
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(Error::spec(format!(
                "detection {det_id} score {score} outside [0, 1]"
            )));
        }
        Ok(Detection {
            det_id,
            video_id,
            frame_index,
            image_id,
            bbox,
            category_id,
            score,
            embedding_ref,
        })
    }
}

// ---------------------------------------------------------------------------
// Track
// ---------------------------------------------------------------------------

/// One linked detection inside a track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackMember {
    pub frame_index: usize,
    pub det_id: u64,
    pub bbox: BoundingBox,
    pub det_score: f64,
}

/// An identity hypothesis: ordered members plus an incrementally maintained
/// mean appearance embedding.
///
/// Track ids are unique within one video of a result set; the pair
/// `(video_id, track_id)` identifies a track globally.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    track_id: u64,
    video_id: u64,
    category_id: u64,
    members: Vec<TrackMember>,
    member_embeddings: Vec<Option<Embedding>>,
    emb_sum: Vec<f64>,
    emb_count: usize,
}

impl Track {
    /// Empty track shell; members are added with [`Track::push_member`].
    pub fn new(track_id: u64, video_id: u64, category_id: u64) -> Self {
        Track {
            track_id,
            video_id,
            category_id,
            members: Vec::new(),
            member_embeddings: Vec::new(),
            emb_sum: Vec::new(),
            emb_count: 0,
        }
    }

    pub fn track_id(&self) -> u64 {
        self.track_id
    }

    pub fn video_id(&self) -> u64 {
        self.video_id
    }

    pub fn category_id(&self) -> u64 {
        self.category_id
    }

    /// Reassigns the track id (used when merging result sets).
    pub fn set_track_id(&mut self, track_id: u64) {
        self.track_id = track_id;
    }

    /// Members in strictly increasing frame order.
    pub fn members(&self) -> &[TrackMember] {
        &self.members
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// True when the track has no members yet.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// First member's frame index (panics on an empty track).
    pub fn start_frame(&self) -> usize {
        self.members[0].frame_index
    }

    /// Last member's frame index (panics on an empty track).
    pub fn end_frame(&self) -> usize {
        self.members[self.members.len() - 1].frame_index
    }

    /// Appends a member; frame indexes must strictly increase.
    ///
    /// When `embedding` is present it joins the running mean. Embeddings of
    /// one track must agree in width.
    pub fn push_member(&mut self, member: TrackMember, embedding: Option<Embedding>) -> Result<()> {
        if let Some(last) = self.members.last() {
            if member.frame_index <= last.frame_index {
                return Err(Error::spec(format!(
                    "track {}: member frame {} does not follow previous frame {} \
                     (one member per frame, increasing order)",
                    self.track_id, member.frame_index, last.frame_index
                )));
            }
        }
        if let Some(e) = &embedding {
            if self.emb_count > 0 && e.dim() != self.emb_sum.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.emb_sum.len(),
                    got: e.dim(),
                });
            }
            if self.emb_sum.is_empty() {
                self.emb_sum = vec![0.0; e.dim()];
            }
            for (acc, v) in self.emb_sum.iter_mut().zip(e.values()) {
                *acc += v;
            }
            self.emb_count += 1;
        }
        self.members.push(member);
        self.member_embeddings.push(embedding);
        Ok(())
    }

    /// Removes and returns the most recent member, updating the running mean.
    pub fn pop_member(&mut self) -> Option<(TrackMember, Option<Embedding>)> {
        let member = self.members.pop()?;
        let embedding = self.member_embeddings.pop().flatten();
        if let Some(e) = &embedding {
            for (acc, v) in self.emb_sum.iter_mut().zip(e.values()) {
                *acc -= v;
            }
            self.emb_count -= 1;
        }
        Some((member, embedding))
    }

    /// Attaches an embedding to an existing member that has none yet.
    ///
    /// Used when tracks reconstructed from a result file are re-joined with
    /// their source embeddings.
    pub fn attach_member_embedding(&mut self, index: usize, embedding: Embedding) -> Result<()> {
        if index >= self.members.len() {
            return Err(Error::reference(format!(
                "track {}: member index {index} out of range",
                self.track_id
            )));
        }
        if self.member_embeddings[index].is_some() {
            return Err(Error::spec(format!(
                "track {}: member {index} already has an embedding",
                self.track_id
            )));
        }
        if self.emb_count > 0 && embedding.dim() != self.emb_sum.len() {
            return Err(Error::DimensionMismatch {
                expected: self.emb_sum.len(),
                got: embedding.dim(),
            });
        }
        if self.emb_sum.is_empty() {
            self.emb_sum = vec![0.0; embedding.dim()];
        }
        for (acc, v) in self.emb_sum.iter_mut().zip(embedding.values()) {
            *acc += v;
        }
        self.emb_count += 1;
        self.member_embeddings[index] = Some(embedding);
        Ok(())
    }

    /// Embedding attached to member `index`, if any.
    pub fn member_embedding(&self, index: usize) -> Option<&Embedding> {
        self.member_embeddings.get(index).and_then(|e| e.as_ref())
    }

    /// Number of members that carry an embedding.
    pub fn embedded_member_count(&self) -> usize {
        self.emb_count
    }

    /// Track confidence: the arithmetic mean of member detection scores.
    ///
    /// Recomputed from the members on every call, so it can never drift from
    /// its definition. Returns 0 for an empty track.
    pub fn score(&self) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        self.members.iter().map(|m| m.det_score).sum::<f64>() / self.members.len() as f64
    }

    /// Renormalized arithmetic mean of all member embeddings.
    ///
    /// # Errors
    ///
    /// [`Error::NoEmbeddings`] when no member carries an embedding;
    /// [`Error::ZeroVector`] when the mean cancels to (near) zero — reported,
    /// never silently skipped.
    pub fn mean_embedding(&self) -> Result<Embedding> {
        if self.emb_count == 0 {
            return Err(Error::NoEmbeddings {
                track_id: self.track_id,
            });
        }
        let n = self.emb_count as f64;
        let mean: Vec<f64> = self.emb_sum.iter().map(|v| v / n).collect();
        Embedding::normalize(&mean)
    }

    /// Appends all members of `later`, which must start strictly after this
    /// track ends and belong to the same video.
    ///
    /// The running embedding sum absorbs the other track's, which equals a
    /// full recomputation over the merged member set.
    pub fn absorb(&mut self, later: Track) -> Result<()> {
        if later.video_id != self.video_id {
            return Err(Error::VideoMismatch {
                left: self.video_id,
                right: later.video_id,
            });
        }
        if let (Some(last), false) = (self.members.last(), later.is_empty()) {
            if later.start_frame() <= last.frame_index {
                return Err(Error::spec(format!(
                    "cannot absorb track {} starting at frame {} into track {} ending at frame {}",
                    later.track_id,
                    later.start_frame(),
                    self.track_id,
                    last.frame_index
                )));
            }
        }
        for (member, embedding) in later
            .members
            .into_iter()
            .zip(later.member_embeddings.into_iter())
        {
            self.push_member(member, embedding)?;
        }
        Ok(())
    }

    /// Member boxes keyed by frame index.
    pub fn boxes_by_frame(&self) -> BTreeMap<u64, BoundingBox> {
        self.members
            .iter()
            .map(|m| (m.frame_index as u64, m.bbox))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// GroundTruthTrack
// ---------------------------------------------------------------------------

/// Annotated identity: per-keyframe boxes for one object in one video.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    pub gt_track_id: u64,
    pub video_id: u64,
    pub category_id: u64,
    /// Boxes keyed by keyframe position; non-empty by construction.
    boxes: BTreeMap<usize, BoundingBox>,
}

impl GroundTruthTrack {
    /// Builds a ground-truth track; at least one box is required.
    pub fn new(
        gt_track_id: u64,
        video_id: u64,
        category_id: u64,
        boxes: BTreeMap<usize, BoundingBox>,
    ) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::spec(format!(
                "ground-truth track {gt_track_id} has no boxes"
            )));
        }
        Ok(GroundTruthTrack {
            gt_track_id,
            video_id,
            category_id,
            boxes,
        })
    }

    /// Boxes keyed by keyframe position.
    pub fn boxes(&self) -> &BTreeMap<usize, BoundingBox> {
        &self.boxes
    }

    /// Box at one keyframe, if annotated there.
    pub fn box_at(&self, frame_index: usize) -> Option<&BoundingBox> {
        self.boxes.get(&frame_index)
    }

    /// First annotated keyframe.
    pub fn start_frame(&self) -> usize {
        *self.boxes.keys().next().expect("non-empty by construction")
    }

    /// Last annotated keyframe.
    pub fn end_frame(&self) -> usize {
        *self
            .boxes
            .keys()
            .next_back()
            .expect("non-empty by construction")
    }
}

// ---------------------------------------------------------------------------
// SequenceDataset
// ---------------------------------------------------------------------------

/// One video's keyframe grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoEntry {
    pub video_id: u64,
    pub name: String,
    /// Keyframe image ids in temporal order; position in this list is the
    /// frame index used everywhere else.
    pub image_ids: Vec<u64>,
    /// Rate of the keyframe grid in frames per second (1.0 for typical
    /// sparsely annotated data; 30.0 when every frame is a keyframe).
    pub keyframe_fps: f64,
}

/// A full sequence dataset: videos, keyframe-bucketed detections, and
/// (optionally) ground-truth tracks.
///
/// Construction validates all cross-references, so the accessors can be
/// infallible about internal consistency.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    videos: BTreeMap<u64, VideoEntry>,
    /// Per video: one bucket per keyframe, detections in file order.
    detections: BTreeMap<u64, Vec<Vec<Detection>>>,
    ground_truth: Vec<GroundTruthTrack>,
    categories: BTreeSet<u64>,
    det_count: usize,
}

impl SequenceDataset {
    /// Assembles and validates a dataset.
    ///
    /// # Errors
    ///
    /// Duplicate video/image/detection ids, detections pointing at unknown
    /// `(video, frame)` cells, and ground truth off the keyframe grid are all
    /// rejected.
    pub fn new(
        videos: Vec<VideoEntry>,
        detections: Vec<Detection>,
        ground_truth: Vec<GroundTruthTrack>,
    ) -> Result<Self> {
        let mut video_map = BTreeMap::new();
        let mut seen_images = BTreeSet::new();
        for video in videos {
            if !(video.keyframe_fps.is_finite() && video.keyframe_fps > 0.0) {
                return Err(Error::spec(format!(
                    "video {}: keyframe fps {} must be positive",
                    video.video_id, video.keyframe_fps
                )));
            }
            if video.image_ids.is_empty() {
                return Err(Error::spec(format!(
                    "video {} has no keyframes",
                    video.video_id
                )));
            }
            for &image_id in &video.image_ids {
                if !seen_images.insert(image_id) {
                    return Err(Error::spec(format!(
                        "image id {image_id} appears more than once"
                    )));
                }
            }
            if video_map.insert(video.video_id, video).is_some() {
                return Err(Error::spec("duplicate video id"));
            }
        }

        let mut buckets: BTreeMap<u64, Vec<Vec<Detection>>> = video_map
            .iter()
            .map(|(&id, v)| (id, vec![Vec::new(); v.image_ids.len()]))
            .collect();
        let mut seen_dets = BTreeSet::new();
        let mut categories = BTreeSet::new();
        let mut det_count = 0usize;
        for det in detections {
            if !seen_dets.insert(det.det_id) {
                return Err(Error::spec(format!("duplicate detection id {}", det.det_id)));
            }
            let video = video_map.get(&det.video_id).ok_or(Error::UnknownVideo {
                video_id: det.video_id,
            })?;
            if det.frame_index >= video.image_ids.len() {
                return Err(Error::reference(format!(
                    "detection {} references frame {} of video {}, which has {} keyframes",
                    det.det_id,
                    det.frame_index,
                    det.video_id,
                    video.image_ids.len()
                )));
            }
            if video.image_ids[det.frame_index] != det.image_id {
                return Err(Error::reference(format!(
                    "detection {}: image id {} does not match keyframe {} of video {}",
                    det.det_id, det.image_id, det.frame_index, det.video_id
                )));
            }
            categories.insert(det.category_id);
            det_count += 1;
            buckets
                .get_mut(&det.video_id)
                .expect("bucket exists for every known video")[det.frame_index]
                .push(det);
        }

        let mut seen_gt = BTreeSet::new();
        for gt in &ground_truth {
            if !seen_gt.insert(gt.gt_track_id) {
                return Err(Error::spec(format!(
                    "duplicate ground-truth track id {}",
                    gt.gt_track_id
                )));
            }
            let video = video_map.get(&gt.video_id).ok_or(Error::UnknownVideo {
                video_id: gt.video_id,
            })?;
            for &frame in gt.boxes().keys() {
                if frame >= video.image_ids.len() {
                    return Err(Error::GridMismatch {
                        detail: format!(
                            "ground-truth track {} has a box at frame {frame}, but video {} has \
                             only {} keyframes",
                            gt.gt_track_id,
                            gt.video_id,
                            video.image_ids.len()
                        ),
                    });
                }
            }
            categories.insert(gt.category_id);
        }

        Ok(SequenceDataset {
            videos: video_map,
            detections: buckets,
            ground_truth,
            categories,
            det_count,
        })
    }

    /// Videos in ascending id order.
    pub fn videos(&self) -> impl Iterator<Item = &VideoEntry> {
        self.videos.values()
    }

    /// Video ids in ascending order.
    pub fn video_ids(&self) -> Vec<u64> {
        self.videos.keys().copied().collect()
    }

    /// One video's keyframe grid.
    pub fn video(&self, video_id: u64) -> Result<&VideoEntry> {
        self.videos
            .get(&video_id)
            .ok_or(Error::UnknownVideo { video_id })
    }

    /// Number of keyframes in one video.
    pub fn frame_count(&self, video_id: u64) -> Result<usize> {
        Ok(self.video(video_id)?.image_ids.len())
    }

    /// Detections of one keyframe, in file order.
    pub fn detections_at(&self, video_id: u64, frame_index: usize) -> Result<&[Detection]> {
        let buckets = self
            .detections
            .get(&video_id)
            .ok_or(Error::UnknownVideo { video_id })?;
        buckets
            .get(frame_index)
            .map(|b| b.as_slice())
            .ok_or_else(|| {
                Error::reference(format!(
                    "frame {frame_index} out of range for video {video_id}"
                ))
            })
    }

    /// All detections of one video in (frame, file-order) order.
    pub fn video_detections(&self, video_id: u64) -> Result<Vec<&Detection>> {
        let buckets = self
            .detections
            .get(&video_id)
            .ok_or(Error::UnknownVideo { video_id })?;
        Ok(buckets.iter().flatten().collect())
    }

    /// All detections in (video, frame, file-order) order.
    pub fn all_detections(&self) -> impl Iterator<Item = &Detection> {
        self.detections.values().flatten().flatten()
    }

    /// Total number of detections.
    pub fn detection_count(&self) -> usize {
        self.det_count
    }

    /// Ground-truth tracks (may be empty).
    pub fn ground_truth(&self) -> &[GroundTruthTrack] {
        &self.ground_truth
    }

    /// Category universe: every category seen in detections or ground truth.
    pub fn categories(&self) -> &BTreeSet<u64> {
        &self.categories
    }

    /// Rebuilds the dataset with a different detection list (same videos and
    /// ground truth), re-running validation.
    pub fn with_detections(&self, detections: Vec<Detection>) -> Result<Self> {
        SequenceDataset::new(
            self.videos.values().cloned().collect(),
            detections,
            self.ground_truth.clone(),
        )
    }

    /// Rebuilds the dataset with a different ground-truth list.
    pub fn with_ground_truth(&self, ground_truth: Vec<GroundTruthTrack>) -> Result<Self> {
        SequenceDataset::new(
            self.videos.values().cloned().collect(),
            self.all_detections().cloned().collect(),
            ground_truth,
        )
    }
}

// ===========================================================================
// Tests
// ===========================================================================
