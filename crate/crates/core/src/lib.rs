//! Detector-agnostic multi-object tracking for sparsely annotated video.
//!
//! The engine links externally supplied detection boxes into identity tracks
//! using only appearance (ReID) embeddings, which keeps association reliable
//! on keyframe grids as sparse as one frame per second where motion cues
//! collapse. A classic Kalman/IoU tracker is included as a baseline, together
//! with tracklet post-association, ensemble merging of two detector streams,
//! track-level mAP evaluation, and a seeded synthetic scenario generator used
//! throughout the test suite.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`model`] — core data types: boxes, detections, embeddings, tracks.
//! * [`ingest`] — detection/embedding/ground-truth/result file formats.
//! * [`assign`] — gated min-cost assignment plus the distance primitives.
//! * [`assoc`] — the appearance-only tracker (gallery + matching cascade).
//! * [`sortbase`] — the Kalman constant-velocity IoU baseline.
//! * [`postproc`] — post-association, ensemble merging, category filters.
//! * [`eval`] — track IoU, 101-point AP, and the detection-oracle bound.
//! * [`synth`] — seeded scenario generation and track fragmentation.

pub mod assign;
pub mod assoc;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod postproc;
pub mod sortbase;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
