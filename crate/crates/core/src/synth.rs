//! Seeded synthetic scenario generator: ground-truth tracks under
//! constant-velocity motion, noisy detections on the keyframe grid, and
//! identity-clustered unit embeddings.
//!
//! # Draw-order contract
//!
//! All randomness comes from one ChaCha8 stream seeded with
//! [`ScenarioSpec::seed`], consumed strictly as `f64` uniforms in `[0, 1)`.
//! Every primitive consumes a fixed number of uniforms — a normal deviate
//! is two uniforms (Box–Muller, cosine branch), a Poisson count is one
//! (inverse CDF) — so the draw sequence below is part of the format
//! contract and adding a config field must never reorder it:
//!
//! 1. Per video (ascending id), per identity (ascending index):
//!    a. category: 1 uniform;
//!    b. prototype: rejection-sampled unit vector, `2 * embedding_dim`
//!       uniforms per attempt;
//!    c. initial state: 6 uniforms — center x, center y, box width, box
//!       height, speed, heading.
//! 2. Per video, per world frame: camera jitter, 2 normals (4 uniforms);
//!    the grid snapshot is recorded before positions advance.
//! 3. Per video, per keyframe:
//!    a. per identity (ascending): 1 uniform miss draw; if kept, 4 box
//!       jitter normals, `embedding_dim` noise normals, 1 score uniform;
//!    b. false positives: 1 Poisson uniform for the count, then per false
//!       positive 4 box uniforms, a rejection-sampled sphere embedding,
//!       1 category uniform, 1 score uniform.
//!
//! Draws are consumed even when a scale is zero (the value is then exact),
//! so toggling a noise term never shifts later draws.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;
use crate::model::{
    BoundingBox, Detection, Embedding, EmbeddingStore, GroundTruthTrack, SequenceDataset,
    VideoEntry,
};

// ---------------------------------------------------------------------------
// Scenario specification
// ---------------------------------------------------------------------------

/// Nominal world frame rate; the keyframe grid runs at
/// `WORLD_FPS / keyframe_stride`.
pub const WORLD_FPS: f64 = 30.0;

/// Attempts per prototype before rejection sampling gives up.
const PROTOTYPE_ATTEMPTS: usize = 10_000;

/// Full description of one synthetic scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    /// Root seed for the single random stream.
    pub seed: u64,
    /// Number of videos; ids are `1..=n_videos`.
    pub n_videos: usize,
    /// World frames per video at [`WORLD_FPS`].
    pub frames_per_video: usize,
    /// World frames between keyframes; `30` gives a 1 FPS grid, `1` puts
    /// every world frame on the grid (full-rate mode).
    pub keyframe_stride: usize,
    /// Object identities simulated per video.
    pub n_identities: usize,
    /// Category labels are drawn uniformly from `1..=n_categories`.
    pub n_categories: u64,
    /// Image width in pixels.
    pub image_width: f64,
    /// Image height in pixels.
    pub image_height: f64,
    /// Slowest identity speed in pixels per world frame.
    pub min_speed: f64,
    /// Fastest identity speed in pixels per world frame.
    pub max_speed: f64,
    /// Standard deviation of the global per-frame camera shift in pixels.
    pub camera_jitter: f64,
    /// Smallest box side in pixels.
    pub min_box_size: f64,
    /// Largest box side in pixels; must stay below the image sides.
    pub max_box_size: f64,
    /// Probability that a ground-truth keyframe box produces no detection.
    pub miss_rate: f64,
    /// Expected false positives per keyframe (Poisson).
    pub fp_rate: f64,
    /// Standard deviation of additive detection box noise in pixels.
    pub box_jitter: f64,
    /// Inclusive score range for true-positive detections.
    pub tp_score_range: (f64, f64),
    /// Inclusive score range for false-positive detections.
    pub fp_score_range: (f64, f64),
    /// Embedding dimension.
    pub embedding_dim: usize,
    /// Minimum pairwise cosine distance between identity prototypes of one
    /// video.
    pub prototype_separation: f64,
    /// Standard deviation of per-detection embedding noise added to the
    /// prototype before renormalization.
    pub embedding_noise: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 7,
            n_videos: 1,
            frames_per_video: 300,
            keyframe_stride: 30,
            n_identities: 5,
            n_categories: 1,
            image_width: 640.0,
            image_height: 480.0,
            min_speed: 0.5,
            max_speed: 2.0,
            camera_jitter: 0.0,
            min_box_size: 24.0,
            max_box_size: 72.0,
            miss_rate: 0.0,
            fp_rate: 0.0,
            box_jitter: 0.0,
            tp_score_range: (0.7, 1.0),
            fp_score_range: (0.1, 0.4),
            embedding_dim: 16,
            prototype_separation: 0.8,
            embedding_noise: 0.0,
        }
    }
}

impl ScenarioSpec {
    /// Checks every field domain.
    pub fn validate(&self) -> Result<()> {
        let fail = |detail: String| Err(Error::spec(detail));
        if self.n_videos == 0 {
            return fail("n_videos must be at least 1".to_string());
        }
        if self.frames_per_video == 0 {
            return fail("frames_per_video must be at least 1".to_string());
        }
        if self.keyframe_stride == 0 {
            return fail("keyframe_stride must be at least 1".to_string());
        }
        if self.n_categories == 0 {
            return fail("n_categories must be at least 1".to_string());
        }
        for (name, value) in [
            ("image_width", self.image_width),
            ("image_height", self.image_height),
        ] {
            if !(value.is_finite() && value >= 1.0) {
                return fail(format!("{name} {value} must be at least 1 pixel"));
            }
        }
        if !(self.min_speed.is_finite() && self.max_speed.is_finite())
            || self.min_speed < 0.0
            || self.min_speed > self.max_speed
        {
            return fail(format!(
                "speed range [{}, {}] must satisfy 0 <= min <= max",
                self.min_speed, self.max_speed
            ));
        }
        for (name, value) in [
            ("camera_jitter", self.camera_jitter),
            ("box_jitter", self.box_jitter),
            ("embedding_noise", self.embedding_noise),
            ("fp_rate", self.fp_rate),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return fail(format!("{name} {value} must be non-negative"));
            }
        }
        if !(self.miss_rate.is_finite() && (0.0..=1.0).contains(&self.miss_rate)) {
            return fail(format!("miss_rate {} outside [0, 1]", self.miss_rate));
        }
        if !(self.min_box_size.is_finite() && self.max_box_size.is_finite())
            || self.min_box_size <= 0.0
            || self.min_box_size > self.max_box_size
        {
            return fail(format!(
                "box size range [{}, {}] must satisfy 0 < min <= max",
                self.min_box_size, self.max_box_size
            ));
        }
        if self.max_box_size >= self.image_width.min(self.image_height) {
            return fail(format!(
                "max_box_size {} must be smaller than both image sides {}x{}",
                self.max_box_size, self.image_width, self.image_height
            ));
        }
        for (name, (lo, hi)) in [
            ("tp_score_range", self.tp_score_range),
            ("fp_score_range", self.fp_score_range),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return fail(format!("{name} [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"));
            }
        }
        if self.embedding_dim == 0 {
            return fail("embedding_dim must be at least 1".to_string());
        }
        if !(self.prototype_separation.is_finite()
            && (0.0..=2.0).contains(&self.prototype_separation))
        {
            return fail(format!(
                "prototype_separation {} outside [0, 2]",
                self.prototype_separation
            ));
        }
        Ok(())
    }

    /// Number of grid positions per video.
    fn keyframe_count(&self) -> usize {
        self.frames_per_video.div_ceil(self.keyframe_stride)
    }
}

// ---------------------------------------------------------------------------
// Random primitives (fixed uniform consumption)
// ---------------------------------------------------------------------------

/// One uniform in `[lo, hi)`; exactly `lo` when the range is empty. Always
/// consumes one draw.
fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// One uniform index in `0..n`; always consumes one draw.
fn uniform_index(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    ((rng.gen::<f64>() * n as f64) as u64).min(n.saturating_sub(1))
}

/// One standard normal deviate via Box–Muller; always consumes two draws.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>(); // (0, 1]: keeps the logarithm finite
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Poisson count by CDF inversion; always consumes one draw. Exact for the
/// desk-scale rates used here, and `lambda = 0` degenerates to zero without
/// a special case.
fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> usize {
    let u = rng.gen::<f64>();
    let mut term = (-lambda).exp();
    let mut cumulative = term;
    let mut k = 0usize;
    while u >= cumulative && term > 0.0 {
        k += 1;
        term *= lambda / k as f64;
        cumulative += term;
    }
    k
}

/// Unit vector uniform on the sphere: normal deviates per coordinate,
/// renormalized; near-zero norms are rejected and redrawn.
fn sphere_point(rng: &mut ChaCha8Rng, dim: usize) -> Embedding {
    loop {
        let values: Vec<f64> = (0..dim).map(|_| gauss(rng)).collect();
        if let Ok(embedding) = Embedding::normalize(&values) {
            return embedding;
        }
    }
}

// ---------------------------------------------------------------------------
// World simulation
// ---------------------------------------------------------------------------

/// Mutable state of one simulated identity.
struct Body {
    category_id: u64,
    cx: f64,
    cy: f64,
    width: f64,
    height: f64,
    vx: f64,
    vy: f64,
}

impl Body {
    /// Advances one world frame, reflecting the center off the walls so the
    /// box stays inside the image.
    fn advance(&mut self, image_w: f64, image_h: f64) {
        self.cx += self.vx;
        self.cy += self.vy;
        let (cx, vx) = reflect(self.cx, self.vx, self.width / 2.0, image_w - self.width / 2.0);
        let (cy, vy) = reflect(self.cy, self.vy, self.height / 2.0, image_h - self.height / 2.0);
        self.cx = cx;
        self.vx = vx;
        self.cy = cy;
        self.vy = vy;
    }

    /// The body's box shifted by the camera offset, clamped into the image.
    fn boxed(&self, jx: f64, jy: f64, image_w: f64, image_h: f64) -> BoundingBox {
        clamp_box(
            self.cx + jx - self.width / 2.0,
            self.cy + jy - self.height / 2.0,
            self.width,
            self.height,
            image_w,
            image_h,
        )
    }
}

/// Reflects `position` into `[lo, hi]`, flipping `velocity` once per bounce.
fn reflect(mut position: f64, mut velocity: f64, lo: f64, hi: f64) -> (f64, f64) {
    loop {
        if position < lo {
            position = 2.0 * lo - position;
            velocity = -velocity;
        } else if position > hi {
            position = 2.0 * hi - position;
            velocity = -velocity;
        } else {
            return (position, velocity);
        }
    }
}

/// Clamps a box into `[0, image_w] x [0, image_h]` with at least 1 px sides.
fn clamp_box(x: f64, y: f64, w: f64, h: f64, image_w: f64, image_h: f64) -> BoundingBox {
    let w = w.clamp(1.0, image_w);
    let h = h.clamp(1.0, image_h);
    let x = x.clamp(0.0, image_w - w);
    let y = y.clamp(0.0, image_h - h);
    BoundingBox::new(x, y, w, h).expect("clamped box has positive size")
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// A generated scenario with its provenance: which identity produced each
/// detection, and every identity prototype.
pub struct Scene {
    pub dataset: SequenceDataset,
    pub store: EmbeddingStore,
    /// Per video id: identity prototypes in identity order.
    pub prototypes: BTreeMap<u64, Vec<Embedding>>,
    /// Per detection id: the 0-based identity index behind a true positive,
    /// or `None` for a false positive.
    pub detection_identities: BTreeMap<u64, Option<usize>>,
}

/// Generates a scenario dataset plus its embedding store.
///
/// # Errors
///
/// [`Error::Spec`] on invalid fields or when prototype rejection sampling
/// cannot reach the requested separation.
pub fn generate(spec: &ScenarioSpec) -> Result<(SequenceDataset, EmbeddingStore)> {
    let scene = generate_scene(spec)?;
    Ok((scene.dataset, scene.store))
}

/// [`generate`] plus provenance; the dataset and store are identical to a
/// plain [`generate`] call with the same spec.
pub fn generate_scene(spec: &ScenarioSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let keyframes = spec.keyframe_count();

    let mut videos = Vec::with_capacity(spec.n_videos);
    let mut detections = Vec::new();
    let mut ground_truth = Vec::new();
    let mut prototypes: BTreeMap<u64, Vec<Embedding>> = BTreeMap::new();
    let mut detection_identities: BTreeMap<u64, Option<usize>> = BTreeMap::new();
    let mut embedding_rows: Vec<f64> = Vec::new();
    let mut next_det_id: u64 = 1;

    for video_index in 0..spec.n_videos {
        let video_id = video_index as u64 + 1;

        // Phase 1: identity setup.
        let mut bodies = Vec::with_capacity(spec.n_identities);
        let mut video_prototypes: Vec<Embedding> = Vec::with_capacity(spec.n_identities);
        for _ in 0..spec.n_identities {
            let category_id = 1 + uniform_index(&mut rng, spec.n_categories);
            let prototype = sample_prototype(&mut rng, spec, &video_prototypes)?;
            video_prototypes.push(prototype);
            let cx = uniform_in(&mut rng, 0.0, spec.image_width);
            let cy = uniform_in(&mut rng, 0.0, spec.image_height);
            let width = uniform_in(&mut rng, spec.min_box_size, spec.max_box_size);
            let height = uniform_in(&mut rng, spec.min_box_size, spec.max_box_size);
            let speed = uniform_in(&mut rng, spec.min_speed, spec.max_speed);
            let heading = uniform_in(&mut rng, 0.0, std::f64::consts::TAU);
            // Start centers inside the reflective band right away.
            let (cx, _) = reflect(cx, 0.0, width / 2.0, spec.image_width - width / 2.0);
            let (cy, _) = reflect(cy, 0.0, height / 2.0, spec.image_height - height / 2.0);
            bodies.push(Body {
                category_id,
                cx,
                cy,
                width,
                height,
                vx: speed * heading.cos(),
                vy: speed * heading.sin(),
            });
        }
        debug_assert_separated(&video_prototypes, spec.prototype_separation);

        // Phase 2: world simulation, recording grid snapshots.
        let mut gt_boxes: Vec<BTreeMap<usize, BoundingBox>> =
            vec![BTreeMap::new(); spec.n_identities];
        for frame in 0..spec.frames_per_video {
            let jx = gauss(&mut rng) * spec.camera_jitter;
            let jy = gauss(&mut rng) * spec.camera_jitter;
            if frame % spec.keyframe_stride == 0 {
                let keyframe = frame / spec.keyframe_stride;
                for (identity, body) in bodies.iter().enumerate() {
                    gt_boxes[identity].insert(
                        keyframe,
                        body.boxed(jx, jy, spec.image_width, spec.image_height),
                    );
                }
            }
            for body in &mut bodies {
                body.advance(spec.image_width, spec.image_height);
            }
        }

        // Phase 3: detections on the grid.
        for keyframe in 0..keyframes {
            let image_id = video_id * 1_000_000 + (keyframe * spec.keyframe_stride) as u64;
            for (identity, body) in bodies.iter().enumerate() {
                let miss = rng.gen::<f64>();
                if miss < spec.miss_rate {
                    continue;
                }
                let gt_box = gt_boxes[identity][&keyframe];
                let dx = gauss(&mut rng) * spec.box_jitter;
                let dy = gauss(&mut rng) * spec.box_jitter;
                let dw = gauss(&mut rng) * spec.box_jitter;
                let dh = gauss(&mut rng) * spec.box_jitter;
                let bbox = clamp_box(
                    gt_box.x + dx,
                    gt_box.y + dy,
                    gt_box.w + dw,
                    gt_box.h + dh,
                    spec.image_width,
                    spec.image_height,
                );
                let noise: Vec<f64> = (0..spec.embedding_dim)
                    .map(|_| gauss(&mut rng) * spec.embedding_noise)
                    .collect();
                let prototype = &video_prototypes[identity];
                // With zero noise the prototype is used verbatim so the
                // zero-noise limit is exact, not merely close.
                let embedding = if spec.embedding_noise == 0.0 {
                    prototype.clone()
                } else {
                    let values: Vec<f64> = prototype
                        .values()
                        .iter()
                        .zip(&noise)
                        .map(|(p, n)| p + n)
                        .collect();
                    Embedding::normalize(&values)?
                };
                let score = uniform_in(
                    &mut rng,
                    spec.tp_score_range.0,
                    spec.tp_score_range.1,
                );
                push_detection(
                    &mut detections,
                    &mut embedding_rows,
                    &mut detection_identities,
                    &mut next_det_id,
                    video_id,
                    keyframe,
                    image_id,
                    bbox,
                    body.category_id,
                    score,
                    &embedding,
                    Some(identity),
                )?;
            }

            let fp_count = poisson(&mut rng, spec.fp_rate);
            for _ in 0..fp_count {
                let cx = uniform_in(&mut rng, 0.0, spec.image_width);
                let cy = uniform_in(&mut rng, 0.0, spec.image_height);
                let w = uniform_in(&mut rng, spec.min_box_size, spec.max_box_size);
                let h = uniform_in(&mut rng, spec.min_box_size, spec.max_box_size);
                let bbox = clamp_box(
                    cx - w / 2.0,
                    cy - h / 2.0,
                    w,
                    h,
                    spec.image_width,
                    spec.image_height,
                );
                let embedding = sphere_point(&mut rng, spec.embedding_dim);
                let category_id = 1 + uniform_index(&mut rng, spec.n_categories);
                let score = uniform_in(
                    &mut rng,
                    spec.fp_score_range.0,
                    spec.fp_score_range.1,
                );
                push_detection(
                    &mut detections,
                    &mut embedding_rows,
                    &mut detection_identities,
                    &mut next_det_id,
                    video_id,
                    keyframe,
                    image_id,
                    bbox,
                    category_id,
                    score,
                    &embedding,
                    None,
                )?;
            }
        }

        let image_ids: Vec<u64> = (0..keyframes)
            .map(|keyframe| video_id * 1_000_000 + (keyframe * spec.keyframe_stride) as u64)
            .collect();
        videos.push(VideoEntry {
            video_id,
            name: format!("synthetic/video_{video_id:04}"),
            image_ids,
            keyframe_fps: WORLD_FPS / spec.keyframe_stride as f64,
        });
        for (identity, boxes) in gt_boxes.into_iter().enumerate() {
            // Ground-truth ids are unique across the whole dataset, dense in
            // (video, identity) order.
            let gt_track_id = (video_index * spec.n_identities + identity) as u64 + 1;
            ground_truth.push(GroundTruthTrack::new(
                gt_track_id,
                video_id,
                bodies[identity].category_id,
                boxes,
            )?);
        }
        prototypes.insert(video_id, video_prototypes);
    }

    let store = if embedding_rows.is_empty() {
        EmbeddingStore::empty()
    } else {
        EmbeddingStore::from_unit_rows(spec.embedding_dim, embedding_rows)?
    };
    let dataset = SequenceDataset::new(videos, detections, ground_truth)?;
    Ok(Scene {
        dataset,
        store,
        prototypes,
        detection_identities,
    })
}

/// Rejection-samples a unit vector at least `prototype_separation` cosine
/// distance from every existing prototype of the video.
fn sample_prototype(
    rng: &mut ChaCha8Rng,
    spec: &ScenarioSpec,
    existing: &[Embedding],
) -> Result<Embedding> {
    for _ in 0..PROTOTYPE_ATTEMPTS {
        let candidate = sphere_point(rng, spec.embedding_dim);
        let fits = existing.iter().all(|other| {
            let dot = candidate
                .dot(other)
                .expect("prototypes share the configured dimension");
            1.0 - dot >= spec.prototype_separation
        });
        if fits {
            return Ok(candidate);
        }
    }
    Err(Error::spec(format!(
        "could not place {} prototypes with pairwise cosine distance >= {} in dimension {}",
        existing.len() + 1,
        spec.prototype_separation,
        spec.embedding_dim
    )))
}

/// Sanity check of the generation invariant; rejection sampling guarantees
/// it by construction.
fn debug_assert_separated(prototypes: &[Embedding], separation: f64) {
    for (i, a) in prototypes.iter().enumerate() {
        for b in prototypes.iter().skip(i + 1) {
            let distance = 1.0 - a.dot(b).expect("uniform dimension");
            debug_assert!(
                distance >= separation - 1e-9,
                "prototype separation violated: {distance} < {separation}"
            );
        }
    }
}

/// Appends one detection and its embedding row.
#[allow(clippy::too_many_arguments)]
fn push_detection(
    detections: &mut Vec<Detection>,
    embedding_rows: &mut Vec<f64>,
    detection_identities: &mut BTreeMap<u64, Option<usize>>,
    next_det_id: &mut u64,
    video_id: u64,
    keyframe: usize,
    image_id: u64,
    bbox: BoundingBox,
    category_id: u64,
    score: f64,
    embedding: &Embedding,
    identity: Option<usize>,
) -> Result<()> {
    let row = embedding_rows.len() / embedding.dim();
    embedding_rows.extend_from_slice(embedding.values());
    let det_id = *next_det_id;
    *next_det_id += 1;
    detections.push(Detection::new(
        det_id,
        video_id,
        keyframe,
        image_id,
        bbox,
        category_id,
        score,
        Some(row),
    )?);
    detection_identities.insert(det_id, identity);
    Ok(())
}

// ---------------------------------------------------------------------------
// Track fragmentation
// ---------------------------------------------------------------------------

/// One deletion window: keyframes `from..to` (half-open) of one video.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapWindow {
    pub video_id: u64,
    pub from: usize,
    pub to: usize,
}

/// Deletes all detections inside the given keyframe windows, leaving ground
/// truth untouched, so every affected identity splits into at least two
/// detection runs.
///
/// # Errors
///
/// [`Error::Spec`] when the dataset has no ground truth, a window is empty
/// or out of range, a window would remove every detection of its video, or
/// an affected identity would not retain keyframes on both sides of the
/// window; [`Error::UnknownVideo`] for windows over unknown videos.
pub fn fragment_tracks(dataset: &SequenceDataset, windows: &[GapWindow]) -> Result<SequenceDataset> {
    if dataset.ground_truth().is_empty() {
        return Err(Error::spec(
            "fragmentation requires ground truth to define identities",
        ));
    }
    if windows.is_empty() {
        return Ok(dataset.clone());
    }
    for window in windows {
        let frames = dataset.frame_count(window.video_id)?;
        if window.from >= window.to || window.to > frames {
            return Err(Error::spec(format!(
                "window [{}, {}) invalid for video {} with {} keyframes",
                window.from, window.to, window.video_id, frames
            )));
        }
    }

    let deleted = |video_id: u64, frame: usize| {
        windows
            .iter()
            .any(|w| w.video_id == video_id && (w.from..w.to).contains(&frame))
    };

    let survivors: Vec<Detection> = dataset
        .all_detections()
        .filter(|det| !deleted(det.video_id, det.frame_index))
        .cloned()
        .collect();

    for window in windows {
        let remaining = survivors
            .iter()
            .filter(|det| det.video_id == window.video_id)
            .count();
        if remaining == 0 {
            return Err(Error::spec(format!(
                "window [{}, {}) empties video {}",
                window.from, window.to, window.video_id
            )));
        }
    }

    // An identity is affected when its ground truth enters a window; it must
    // keep keyframes strictly before and at-or-after the window so two
    // disconnected runs remain.
    for gt in dataset.ground_truth() {
        for window in windows {
            if window.video_id != gt.video_id {
                continue;
            }
            let frames: Vec<usize> = gt.boxes().keys().copied().collect();
            let inside = frames.iter().any(|f| (window.from..window.to).contains(f));
            if !inside {
                continue;
            }
            let before = frames.iter().any(|f| *f < window.from);
            let after = frames.iter().any(|f| *f >= window.to);
            if !(before && after) {
                return Err(Error::spec(format!(
                    "window [{}, {}) would not split identity {} of video {} into two runs",
                    window.from, window.to, gt.gt_track_id, gt.video_id
                )));
            }
        }
    }

    dataset.with_detections(survivors)
}

// ===========================================================================
// Tests
// ===========================================================================
