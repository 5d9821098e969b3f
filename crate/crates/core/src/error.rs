//! Crate-wide error type.
//!
//! Every fallible operation in the engine returns [`Error`]. File loaders are
//! strict: the first malformed value, dangling reference, or header mismatch
//! aborts the load with a message that names the offending location instead
//! of silently skipping the record.

use thiserror::Error;

/// Unified error for parsing, validation, and numeric failure modes.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector with (near-)zero L2 norm cannot be normalized.
    #[error("cannot normalize a vector with zero norm (|v| < 1e-12)")]
    ZeroVector,

    /// Two embeddings (or an embedding and a configured width) disagree in length.
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A value that must be finite was NaN or infinite.
    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    /// A mean embedding was requested from a track with no embedded members.
    #[error("track {track_id} has no member embeddings")]
    NoEmbeddings { track_id: u64 },

    /// A gallery distance was requested against an empty gallery.
    #[error("track {track_id} has an empty appearance gallery")]
    EmptyGallery { track_id: u64 },

    /// Appearance tracking needs an embedding for every detection.
    #[error("detection {det_id} carries no embedding (appearance tracking requires one per detection)")]
    MissingEmbedding { det_id: u64 },

    /// A video id was requested that the dataset does not contain.
    #[error("unknown video id {video_id}")]
    UnknownVideo { video_id: u64 },

    /// Malformed file content (JSON syntax, binary layout, value domain).
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },

    /// A cross-reference (image id, video id, embedding offset, …) does not resolve.
    #[error("dangling reference: {detail}")]
    Ref { detail: String },

    /// Embedding sidecar header disagrees with the detection file's metadata.
    #[error("embedding sidecar header mismatch: {detail}")]
    HeaderMismatch { detail: String },

    /// A result file stores two boxes for one (video, track, image) triple.
    #[error("track {track_id} in video {video_id} has two records for image {image_id}")]
    Overlap {
        video_id: u64,
        track_id: u64,
        image_id: u64,
    },

    /// The Kalman innovation covariance was numerically singular.
    #[error("innovation covariance is numerically singular")]
    SingularInnovation,

    /// Post-association requires a mean embedding on every input track.
    #[error("track {track_id} has no mean embedding (post-association needs one per track)")]
    MissingMeanEmbedding { track_id: u64 },

    /// A category whitelist contained no entries.
    #[error("category whitelist is empty")]
    EmptyWhitelist,

    /// Two tracks from different videos cannot be compared frame-by-frame.
    #[error("video mismatch: track from video {left} compared against video {right}")]
    VideoMismatch { left: u64, right: u64 },

    /// Detections and ground truth do not share a keyframe grid.
    #[error("keyframe grid mismatch: {detail}")]
    GridMismatch { detail: String },

    /// A scenario or configuration value is outside its valid domain.
    #[error("invalid specification: {detail}")]
    Spec { detail: String },

    /// Underlying I/O failure.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Shorthand for a [`Error::Parse`] with formatted detail.
    pub fn parse(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            detail: detail.into(),
        }
    }

    /// Shorthand for a [`Error::Ref`] with formatted detail.
    pub fn reference(detail: impl Into<String>) -> Self {
        Error::Ref {
            detail: detail.into(),
        }
    }

    /// Shorthand for a [`Error::Spec`] with formatted detail.
    pub fn spec(detail: impl Into<String>) -> Self {
        Error::Spec {
            detail: detail.into(),
        }
    }
}
