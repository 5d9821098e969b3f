//! SORT baseline: constant-velocity Kalman filtering plus IoU association.
//!
//! This is the classic geometry-only tracker, included to demonstrate the
//! failure mode the appearance tracker exists to solve: between sparse
//! keyframes objects move far enough that predicted and observed boxes stop
//! overlapping, so IoU association fragments identities. On dense frame
//! grids with moderate motion it behaves like ordinary SORT.
//!
//! State per track is the 7-vector `(cx, cy, s, r, vcx, vcy, vs)` — box
//! center, area, aspect ratio (w/h), and the velocities of the first three;
//! aspect ratio is modeled as constant. Time is measured in grid steps: one
//! predict per keyframe with `dt = 1`, whatever the grid's real-world rate,
//! so the same code runs on a 30 FPS grid and a 1 FPS keyframe grid.
//!
//! Association is category-agnostic (original SORT behavior); a track's
//! category is the category of its founding detection. Track members store
//! the matched detection boxes, not the filtered estimates.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::assign::{iou, solve_assignment, CostMatrix};
use crate::error::Error;
use crate::model::{BoundingBox, Detection, SequenceDataset, Track, TrackMember};
use crate::Result;

type Vec7 = SVector<f64, 7>;
type Mat7 = SMatrix<f64, 7, 7>;
type Vec4 = SVector<f64, 4>;
type Mat4 = SMatrix<f64, 4, 4>;
type Mat4x7 = SMatrix<f64, 4, 7>;

/// Floor applied to the area (and, after updates, aspect) component so box
/// reconstruction never degenerates.
pub const AREA_FLOOR: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// Tuning knobs of the SORT baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SortConfig {
    /// Minimum IoU between a predicted and a detected box for a feasible
    /// match (equivalently: assignment cost `1 - IoU` is gated at
    /// `1 - iou_gate`). Must lie in `(0, 1]`.
    pub iou_gate: f64,
    /// Consecutive unmatched frames a track survives before retiring.
    pub max_age: usize,
    /// Minimum member count for a track to appear in the output.
    pub min_hits: usize,
    /// Multiplier on the process noise covariance.
    pub process_noise_scale: f64,
    /// Multiplier on the measurement noise covariance.
    pub measurement_noise_scale: f64,
}

impl Default for SortConfig {
    fn default() -> Self {
        SortConfig {
            iou_gate: 0.3,
            max_age: 1,
            min_hits: 3,
            process_noise_scale: 1.0,
            measurement_noise_scale: 1.0,
        }
    }
}

impl SortConfig {
    /// Checks every field's domain.
    pub fn validate(&self) -> Result<()> {
        if !self.iou_gate.is_finite() || self.iou_gate <= 0.0 || self.iou_gate > 1.0 {
            return Err(Error::spec(format!(
                "iou_gate {} outside (0, 1]",
                self.iou_gate
            )));
        }
        for (name, v) in [
            ("process_noise_scale", self.process_noise_scale),
            ("measurement_noise_scale", self.measurement_noise_scale),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::spec(format!("{name} {v} must be positive")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Kalman filter
// ---------------------------------------------------------------------------

/// Per-track Kalman state over `(cx, cy, s, r, vcx, vcy, vs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanBoxState {
    /// State mean.
    pub mean: Vec7,
    /// State covariance; kept symmetric with a non-negative diagonal.
    pub covariance: Mat7,
}

/// Measurement model: observe `(cx, cy, s, r)`.
fn measurement_matrix() -> Mat4x7 {
    Mat4x7::from_fn(|r, c| if r == c { 1.0 } else { 0.0 })
}

/// Per-step process noise (before the config scale and `dt` factor).
fn process_noise_base() -> Mat7 {
    Mat7::from_diagonal(&Vec7::from_column_slice(&[
        1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4,
    ]))
}

/// Measurement noise (before the config scale).
fn measurement_noise_base() -> Mat4 {
    Mat4::from_diagonal(&Vec4::from_column_slice(&[1.0, 1.0, 10.0, 10.0]))
}

fn box_to_measurement(b: &BoundingBox) -> Vec4 {
    let (cx, cy) = b.center();
    Vec4::from_column_slice(&[cx, cy, b.area(), b.w / b.h])
}

impl KalmanBoxState {
    /// Initializes a track state from its first detection box: measured
    /// components take the box values, velocities start at zero with large
    /// uncertainty.
    pub fn from_box(b: &BoundingBox) -> Self {
        let z = box_to_measurement(b);
        let mean = Vec7::from_column_slice(&[z[0], z[1], z[2], z[3], 0.0, 0.0, 0.0]);
        let covariance = Mat7::from_diagonal(&Vec7::from_column_slice(&[
            10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4,
        ]));
        KalmanBoxState { mean, covariance }
    }

    /// Reconstructs the box `(x, y, w, h)` from the current mean.
    pub fn to_bbox(&self) -> Result<BoundingBox> {
        let (cx, cy, s, r) = (self.mean[0], self.mean[1], self.mean[2], self.mean[3]);
        let w = (s * r).sqrt();
        let h = (s / r).sqrt();
        BoundingBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }
}

/// Constant-velocity prediction over `dt` grid steps.
///
/// Mean: `cx += vcx*dt`, `cy += vcy*dt`, `s += vs*dt`, `r` unchanged; the
/// area component is floored at [`AREA_FLOOR`]. Covariance: `F P Fᵀ + Q dt`
/// with `Q` the scaled process noise; re-symmetrized after the product.
pub fn kf_predict(state: &KalmanBoxState, dt: f64, cfg: &SortConfig) -> KalmanBoxState {
    let mut f = Mat7::identity();
    f[(0, 4)] = dt;
    f[(1, 5)] = dt;
    f[(2, 6)] = dt;

    let mut mean = f * state.mean;
    mean[2] = mean[2].max(AREA_FLOOR);

    let q = process_noise_base() * (cfg.process_noise_scale * dt);
    let covariance = f * state.covariance * f.transpose() + q;
    KalmanBoxState {
        mean,
        covariance: symmetrize(covariance),
    }
}

/// Standard Kalman correction against a measured box.
///
/// Posterior mean `x + K y` and covariance `(I - K H) P`, with the gain
/// solved through a Cholesky factorization of the innovation covariance. As
/// a numeric guard the area and aspect components are floored at
/// [`AREA_FLOOR`] so the state always reconstructs to a valid box.
///
/// # Errors
///
/// [`Error::SingularInnovation`] when the innovation covariance has no
/// Cholesky factorization — reported, never pseudo-inverted.
pub fn kf_update(
    state: &KalmanBoxState,
    measured: &BoundingBox,
    cfg: &SortConfig,
) -> Result<KalmanBoxState> {
    let h = measurement_matrix();
    let r = measurement_noise_base() * cfg.measurement_noise_scale;
    let z = box_to_measurement(measured);

    let innovation = z - h * state.mean;
    let s: Mat4 = h * state.covariance * h.transpose() + r;
    let chol = nalgebra::Cholesky::new(s).ok_or(Error::SingularInnovation)?;
    // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ because P and S are symmetric.
    let gain = chol.solve(&(h * state.covariance)).transpose();

    let mut mean = state.mean + gain * innovation;
    mean[2] = mean[2].max(AREA_FLOOR);
    mean[3] = mean[3].max(AREA_FLOOR);
    let covariance = (Mat7::identity() - gain * h) * state.covariance;
    Ok(KalmanBoxState {
        mean,
        covariance: symmetrize(covariance),
    })
}

fn symmetrize(m: Mat7) -> Mat7 {
    (m + m.transpose()) * 0.5
}

// ---------------------------------------------------------------------------
// Full-video tracking
// ---------------------------------------------------------------------------

struct Live {
    kf: KalmanBoxState,
    track: Track,
    misses: usize,
}

fn member_of(det: &Detection) -> TrackMember {
    TrackMember {
        frame_index: det.frame_index,
        det_id: det.det_id,
        bbox: det.bbox,
        det_score: det.score,
    }
}

/// Runs the SORT baseline over every keyframe of one video.
///
/// Per frame: every live track is predicted one grid step forward, predicted
/// boxes are matched to detections by minimum `1 - IoU` (feasible only at
/// IoU ≥ `iou_gate`), matches are filtered into the Kalman state, unmatched
/// tracks age out after `max_age` consecutive misses, and every unmatched
/// detection starts a new track. Only tracks with at least `min_hits`
/// members are reported, in ascending id order (ids count every track ever
/// started, so the reported sequence may skip values).
pub fn sort_track_video(
    dataset: &SequenceDataset,
    video_id: u64,
    cfg: &SortConfig,
) -> Result<Vec<Track>> {
    cfg.validate()?;
    let video = dataset.video(video_id)?;
    let mut active: Vec<Live> = Vec::new();
    let mut finished: Vec<Track> = Vec::new();
    let mut next_id = 1u64;

    for frame in 0..video.image_ids.len() {
        let mut predicted: Vec<Option<BoundingBox>> = Vec::with_capacity(active.len());
        for live in &mut active {
            live.kf = kf_predict(&live.kf, 1.0, cfg);
            predicted.push(live.kf.to_bbox().ok());
        }

        let dets = dataset.detections_at(video_id, frame)?;
        let mut cost = CostMatrix::new(active.len(), dets.len());
        for (r, pred) in predicted.iter().enumerate() {
            if let Some(pred) = pred {
                for (c, det) in dets.iter().enumerate() {
                    let overlap = iou(pred, &det.bbox);
                    if overlap >= cfg.iou_gate {
                        cost.set(r, c, 1.0 - overlap);
                    }
                }
            }
        }
        let pairs = solve_assignment(&cost);

        let mut matched_rows = vec![false; active.len()];
        let mut matched_cols = vec![false; dets.len()];
        for &(r, c) in &pairs {
            matched_rows[r] = true;
            matched_cols[c] = true;
            active[r].kf = kf_update(&active[r].kf, &dets[c].bbox, cfg)?;
            active[r].track.push_member(member_of(&dets[c]), None)?;
            active[r].misses = 0;
        }

        let mut retiring = Vec::new();
        for (r, live) in active.iter_mut().enumerate() {
            if !matched_rows[r] {
                live.misses += 1;
                if live.misses > cfg.max_age {
                    retiring.push(r);
                }
            }
        }
        for r in retiring.into_iter().rev() {
            finished.push(active.remove(r).track);
        }

        for (c, det) in dets.iter().enumerate() {
            if matched_cols[c] {
                continue;
            }
            let mut track = Track::new(next_id, video_id, det.category_id);
            track.push_member(member_of(det), None)?;
            next_id += 1;
            active.push(Live {
                kf: KalmanBoxState::from_box(&det.bbox),
                track,
                misses: 0,
            });
        }
    }

    finished.extend(active.into_iter().map(|l| l.track));
    let mut reported: Vec<Track> = finished
        .into_iter()
        .filter(|t| t.len() >= cfg.min_hits)
        .collect();
    reported.sort_by_key(|t| t.track_id());
    Ok(reported)
}

// ===========================================================================
// Tests
// ===========================================================================
