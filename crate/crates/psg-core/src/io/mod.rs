//! File formats and report emission.
//!
//! All JSON output is canonical: fixed key order (struct declaration order,
//! sorted map keys), shortest round-trip float formatting, two-space
//! indentation, and a trailing newline — identical inputs always produce
//! identical bytes.

pub mod boxgraph;
pub mod dataset;
pub mod matrix;
pub mod prediction;
pub mod report;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const DATASET_VERSION: &str = "psg-dataset/1";
pub const PREDICTIONS_VERSION: &str = "psg-predictions/1";
pub const BOXGRAPH_VERSION: &str = "psg-boxgraph/1";
pub const REPORT_VERSION: &str = "psg-report/1";
pub const PQ_REPORT_VERSION: &str = "psg-pq-report/1";

/// Renders a value as canonical JSON text.
pub(crate) fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub(crate) fn write_canonical_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = to_canonical_json(value)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}
