//! Crate-wide error type.
//!
//! Error messages carry stable kebab-case tokens (e.g. `canvas-mismatch`,
//! `length-mismatch`) so CLI diagnostics and tests can match on them.

use crate::mask::SceneCanvas;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("canvas-mismatch: {left}x{} vs {right}x{}", .left_w, .right_w)]
    CanvasMismatch {
        left: u32,
        left_w: u32,
        right: u32,
        right_w: u32,
    },

    #[error("length-mismatch: runs sum to {sum} but canvas has {expected} pixels")]
    RunLengthMismatch { sum: u64, expected: u64 },

    #[error("zero-run: interior run at index {index} has length 0")]
    InteriorZeroRun { index: usize },

    #[error("empty-mask: operation requires at least one foreground pixel")]
    EmptyMask,

    #[error("degenerate-box: ({x0},{y0},{x1},{y1}) is not a positive-area half-open box")]
    DegenerateBox { x0: u32, y0: u32, x1: u32, y1: u32 },

    #[error("score-out-of-range: {value} at pixel {index} is outside [0,1]")]
    ScoreOutOfRange { value: f64, index: usize },

    #[error("invalid-distribution: {reason}")]
    InvalidDistribution { reason: String },

    #[error("label-out-of-range: label {label} for a head of size {size}")]
    LabelOutOfRange { label: usize, size: usize },

    #[error("non-finite-score: entry ({row},{col}) of the score matrix is not finite")]
    NonFiniteScore { row: usize, col: usize },

    #[error("invalid-assignment: {reason}")]
    InvalidAssignment { reason: String },

    #[error("zero-vector: cosine similarity is undefined for the zero vector")]
    ZeroVector,

    #[error("dim-mismatch: vectors of dimension {left} and {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("length-mismatch: lists of length {subjects}, {predicates}, {objects}")]
    ListLengthMismatch {
        subjects: usize,
        predicates: usize,
        objects: usize,
    },

    #[error("empty-corpus: the dataset contains no images")]
    EmptyCorpus,

    #[error("unknown-token: no embedding for token \"{token}\"")]
    UnknownToken { token: String },

    #[error("unsorted-predictions: the triplet at rank {rank} outscores its predecessor")]
    UnsortedPredictions { rank: usize },

    #[error("missing-image: \"{image_id}\" present in one input but not the other")]
    MissingImage { image_id: String },

    #[error("duplicate-image: \"{image_id}\" appears more than once")]
    DuplicateImage { image_id: String },

    #[error("grounding-mode-mismatch: {reason}")]
    GroundingModeMismatch { reason: String },

    #[error("grounding-index-out-of-range: instance {index} in a graph with {len} instances")]
    GroundingIndexOutOfRange { index: usize, len: usize },

    #[error("invalid-config: {reason}")]
    InvalidConfig { reason: String },

    #[error("infeasible-fixture: {reason}")]
    InfeasibleFixture { reason: String },

    #[error("parse-error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("json parse error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn canvas_mismatch(left: SceneCanvas, right: SceneCanvas) -> Self {
        Error::CanvasMismatch {
            left: left.height,
            left_w: left.width,
            right: right.height,
            right_w: right.width,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
