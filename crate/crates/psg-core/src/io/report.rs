//! Report documents. Every report echoes the configuration it was produced
//! under plus the tool version, so the numbers are reproducible from the
//! artifact alone.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::eval::{EvalMode, EvalReport, PqAverages, PqClassReport, PqSummary, PredicateRecall, RecallAtK};

use super::{PQ_REPORT_VERSION, REPORT_VERSION};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct ReportDocument<'a> {
    version: &'static str,
    tool_version: &'static str,
    mode: EvalMode,
    k_values: &'a [usize],
    iou_threshold: f64,
    image_count: usize,
    gt_triplet_count: usize,
    recalls: &'a [RecallAtK],
    per_predicate: &'a [PredicateRecall],
    #[serde(skip_serializing_if = "Option::is_none")]
    pq: &'a Option<PqSummary>,
}

/// Canonical JSON for an evaluation report.
pub fn render_eval_report(report: &EvalReport) -> Result<String> {
    super::to_canonical_json(&ReportDocument {
        version: REPORT_VERSION,
        tool_version: TOOL_VERSION,
        mode: report.mode,
        k_values: &report.k_values,
        iou_threshold: report.iou_threshold,
        image_count: report.image_count,
        gt_triplet_count: report.gt_triplet_count,
        recalls: &report.recalls,
        per_predicate: &report.per_predicate,
        pq: &report.pq,
    })
}

pub fn write_eval_report(report: &EvalReport, path: &Path) -> Result<()> {
    std::fs::write(path, render_eval_report(report)?)?;
    Ok(())
}

#[derive(Serialize)]
struct PqDocument<'a> {
    version: &'static str,
    tool_version: &'static str,
    image_count: usize,
    averaged: &'a PqAverages,
    per_class: &'a [PqClassReport],
}

/// Canonical JSON for a corpus panoptic-quality report.
pub fn render_pq_report(summary: &PqSummary, image_count: usize) -> Result<String> {
    super::to_canonical_json(&PqDocument {
        version: PQ_REPORT_VERSION,
        tool_version: TOOL_VERSION,
        image_count,
        averaged: &summary.averaged,
        per_class: &summary.per_class,
    })
}

pub fn write_pq_report(summary: &PqSummary, image_count: usize, path: &Path) -> Result<()> {
    std::fs::write(path, render_pq_report(summary, image_count)?)?;
    Ok(())
}
