//! Panoptic scene graph toolkit.
//!
//! A panoptic scene graph grounds every object of an image — things and
//! stuff alike — with a disjoint segmentation mask and connects them with
//! subject-predicate-object relation triplets. This crate implements the
//! data model and everything needed to evaluate predictions against it
//! without touching a neural network:
//!
//! - [`model`] — vocabularies, graphs, validation, corpus statistics
//! - [`mask`] — run-length mask algebra: IoU, unions, tightest boxes, and
//!   the per-pixel argmax merge that flattens overlapping soft masks
//! - [`assign`] — triplet match scores, an exact optimal-assignment solver,
//!   and the matched-pair loss
//! - [`query`] — cosine-similarity role selection between relation and
//!   object query vectors
//! - [`eval`] — ranked triplet recall (R@K / mR@K) with strict dual
//!   mask-IoU matching, plus panoptic quality for segmentation diagnosis
//! - [`fusion`] — merging box-grounded relation annotations onto
//!   segmentation datasets via greedy IoU matching
//! - [`fixtures`] — deterministic synthetic corpora with known expected
//!   metrics
//! - [`io`] — canonical file formats for all of the above

pub mod assign;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod fusion;
pub mod io;
pub mod mask;
pub mod model;
pub mod query;
pub mod rng;

pub use error::{Error, Result};
pub use eval::{EvalConfig, EvalMode, EvalReport};
pub use mask::{Bitmap, SceneCanvas, SegmentMask};
pub use model::{ClassVocabulary, PanopticSceneGraph, PsgDataset};
