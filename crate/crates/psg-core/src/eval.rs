//! Evaluation protocol: ranked triplet recall with dual mask-IoU matching,
//! dataset-level R@K / mR@K in both evaluation modes, and panoptic quality
//! for segmentation diagnosis.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{mask_iou, SceneCanvas, SegmentMask};
use crate::model::{PanopticSceneGraph, PsgDataset, RelationTriplet};

/// Segment-matching IoU threshold used by panoptic quality.
const PQ_IOU_THRESHOLD: f64 = 0.5;

/// How predictions ground their subjects and objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Groundings reference ground-truth instance indices.
    PredCls,
    /// Groundings are predicted segment masks.
    SgDet,
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalMode::PredCls => write!(f, "predcls"),
            EvalMode::SgDet => write!(f, "sgdet"),
        }
    }
}

/// A predicted endpoint grounding, shaped by the evaluation mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Grounding {
    GtInstance(usize),
    Mask(SegmentMask),
}

/// One ranked prediction: labeled, grounded subject and object plus a
/// predicate and a confidence score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTriplet {
    pub subject_label: usize,
    pub subject: Grounding,
    pub predicate: usize,
    pub object_label: usize,
    pub object: Grounding,
    pub score: f64,
}

/// Ranked predictions for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePredictions {
    pub image_id: String,
    pub canvas: SceneCanvas,
    pub triplets: Vec<ScoredTriplet>,
}

/// All predictions of one run, tagged with their grounding mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub mode: EvalMode,
    pub images: Vec<ImagePredictions>,
}

/// Evaluation settings: mode, ranks, and the strict IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub mode: EvalMode,
    pub k_values: Vec<usize>,
    pub iou_threshold: f64,
}

impl EvalConfig {
    pub fn new(mode: EvalMode, k_values: Vec<usize>, iou_threshold: f64) -> Result<Self> {
        if k_values.is_empty() {
            return Err(Error::InvalidConfig {
                reason: "at least one K value is required".into(),
            });
        }
        if k_values[0] == 0 || k_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig {
                reason: format!("K values {k_values:?} must be strictly increasing and positive"),
            });
        }
        if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
            return Err(Error::InvalidConfig {
                reason: format!("IoU threshold {iou_threshold} must lie in (0, 1]"),
            });
        }
        Ok(EvalConfig {
            mode,
            k_values,
            iou_threshold,
        })
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: EvalMode::SgDet,
            k_values: vec![20, 50, 100],
            iou_threshold: 0.5,
        }
    }
}

fn grounding_hits(
    grounding: &Grounding,
    gt_index: usize,
    graph: &PanopticSceneGraph,
    cfg: &EvalConfig,
) -> Result<bool> {
    match (cfg.mode, grounding) {
        (EvalMode::PredCls, Grounding::GtInstance(index)) => {
            if *index >= graph.instances.len() {
                return Err(Error::GroundingIndexOutOfRange {
                    index: *index,
                    len: graph.instances.len(),
                });
            }
            Ok(*index == gt_index)
        }
        (EvalMode::SgDet, Grounding::Mask(mask)) => {
            let gt_mask = graph.instances[gt_index].mask();
            Ok(mask_iou(mask, gt_mask)? > cfg.iou_threshold)
        }
        (mode, _) => Err(Error::GroundingModeMismatch {
            reason: format!("grounding variant does not fit {mode} mode"),
        }),
    }
}

/// Whether a prediction recalls a specific ground-truth relation.
///
/// All three labels must match, and both endpoint groundings must pass the
/// strict IoU criterion (instance-index equality in PredCls mode, where the
/// disjoint ground-truth masks make the two checks coincide).
pub fn triplet_matches(
    pred: &ScoredTriplet,
    gt: &RelationTriplet,
    graph: &PanopticSceneGraph,
    cfg: &EvalConfig,
) -> Result<bool> {
    let subject = graph
        .instances
        .get(gt.subject_index)
        .ok_or(Error::GroundingIndexOutOfRange {
            index: gt.subject_index,
            len: graph.instances.len(),
        })?;
    let object = graph
        .instances
        .get(gt.object_index)
        .ok_or(Error::GroundingIndexOutOfRange {
            index: gt.object_index,
            len: graph.instances.len(),
        })?;
    if pred.subject_label != subject.class_id
        || pred.predicate != gt.predicate_id
        || pred.object_label != object.class_id
    {
        return Ok(false);
    }
    Ok(grounding_hits(&pred.subject, gt.subject_index, graph, cfg)?
        && grounding_hits(&pred.object, gt.object_index, graph, cfg)?)
}

fn ensure_ranked(preds: &[ScoredTriplet]) -> Result<()> {
    use std::cmp::Ordering;
    for (rank, window) in preds.windows(2).enumerate() {
        // NaN scores compare as unordered and are rejected too
        let ordered = matches!(
            window[0].score.partial_cmp(&window[1].score),
            Some(Ordering::Greater | Ordering::Equal)
        );
        if !ordered {
            return Err(Error::UnsortedPredictions { rank: rank + 1 });
        }
    }
    Ok(())
}

/// Greedy one-to-one matching of the top-`limit` predictions in rank order.
///
/// Each prediction consumes the first not-yet-consumed matching ground-truth
/// relation in list order. Returns `(rank, gt_relation_index)` per
/// consumption, with ranks 1-based; the consumption sequence for any smaller
/// limit is a prefix of the sequence for a larger one.
fn greedy_match(
    preds: &[ScoredTriplet],
    graph: &PanopticSceneGraph,
    limit: usize,
    cfg: &EvalConfig,
) -> Result<Vec<(usize, usize)>> {
    ensure_ranked(preds)?;
    let mut consumed = vec![false; graph.relations.len()];
    let mut hits = Vec::new();
    for (at, pred) in preds.iter().take(limit).enumerate() {
        for (g, gt) in graph.relations.iter().enumerate() {
            if consumed[g] {
                continue;
            }
            if triplet_matches(pred, gt, graph, cfg)? {
                consumed[g] = true;
                hits.push((at + 1, g));
                break;
            }
        }
    }
    Ok(hits)
}

/// Hits and total for one image at rank `k`.
pub fn recall_at_k(
    preds: &[ScoredTriplet],
    graph: &PanopticSceneGraph,
    k: usize,
    cfg: &EvalConfig,
) -> Result<(usize, usize)> {
    let hits = greedy_match(preds, graph, k, cfg)?;
    Ok((hits.len(), graph.relations.len()))
}

/// Recall and mean recall at one rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallAtK {
    pub k: usize,
    pub recall: f64,
    pub mean_recall: f64,
}

/// Dataset-level recall of one predicate at each rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredicateRecall {
    pub predicate_id: usize,
    pub name: String,
    pub gt_count: usize,
    pub recall_at: Vec<f64>,
}

/// Full evaluation output: configuration echo, R@K / mR@K rows, the
/// per-predicate recall table, and an optional panoptic-quality block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub k_values: Vec<usize>,
    pub iou_threshold: f64,
    pub image_count: usize,
    pub gt_triplet_count: usize,
    pub recalls: Vec<RecallAtK>,
    pub per_predicate: Vec<PredicateRecall>,
    pub pq: Option<PqSummary>,
}

struct ImageOutcome {
    hits: Vec<(usize, usize)>,
    gt_predicates: Vec<usize>,
}

/// Evaluates ranked predictions against a ground-truth dataset.
///
/// R@K accumulates hits and totals over all images; per-predicate recalls
/// accumulate at the dataset level and mR@K averages them over predicates
/// with at least one ground-truth triplet. Images are reduced in image-id
/// order, so results do not depend on worker scheduling.
pub fn evaluate(
    dataset: &PsgDataset,
    predictions: &PredictionSet,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if predictions.mode != cfg.mode {
        return Err(Error::GroundingModeMismatch {
            reason: format!(
                "prediction file is {} mode but the evaluation runs {} mode",
                predictions.mode, cfg.mode
            ),
        });
    }
    let mut pred_by_id: HashMap<&str, &ImagePredictions> = HashMap::new();
    for image in &predictions.images {
        if pred_by_id.insert(&image.image_id, image).is_some() {
            return Err(Error::DuplicateImage {
                image_id: image.image_id.clone(),
            });
        }
    }
    let mut gt_ids: HashMap<&str, usize> = HashMap::new();
    for image in &dataset.images {
        if gt_ids.insert(&image.image_id, 0).is_some() {
            return Err(Error::DuplicateImage {
                image_id: image.image_id.clone(),
            });
        }
    }
    for image in &predictions.images {
        if !gt_ids.contains_key(image.image_id.as_str()) {
            return Err(Error::MissingImage {
                image_id: image.image_id.clone(),
            });
        }
    }

    let mut ordered: Vec<&crate::model::DatasetImage> = dataset.images.iter().collect();
    ordered.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let limit = *cfg.k_values.last().expect("validated config");
    let outcomes: Vec<Result<ImageOutcome>> = ordered
        .par_iter()
        .map(|image| {
            let preds = pred_by_id
                .get(image.image_id.as_str())
                .ok_or_else(|| Error::MissingImage {
                    image_id: image.image_id.clone(),
                })?;
            if preds.canvas != image.graph.canvas {
                return Err(Error::canvas_mismatch(preds.canvas, image.graph.canvas));
            }
            let hits = greedy_match(&preds.triplets, &image.graph, limit, cfg)?;
            let gt_predicates = image
                .graph
                .relations
                .iter()
                .map(|r| r.predicate_id)
                .collect();
            Ok(ImageOutcome { hits, gt_predicates })
        })
        .collect();

    let predicate_count = dataset.vocabulary.predicate_count();
    let mut total_gt = 0usize;
    let mut gt_per_predicate = vec![0usize; predicate_count];
    let mut hits_at = vec![0usize; cfg.k_values.len()];
    let mut hits_per_predicate = vec![vec![0usize; predicate_count]; cfg.k_values.len()];

    for outcome in outcomes {
        let outcome = outcome?;
        total_gt += outcome.gt_predicates.len();
        for &p in &outcome.gt_predicates {
            *gt_per_predicate
                .get_mut(p)
                .ok_or(Error::LabelOutOfRange {
                    label: p,
                    size: predicate_count,
                })? += 1;
        }
        for (rank, g) in outcome.hits {
            let p = outcome.gt_predicates[g];
            for (slot, &k) in cfg.k_values.iter().enumerate() {
                if rank <= k {
                    hits_at[slot] += 1;
                    hits_per_predicate[slot][p] += 1;
                }
            }
        }
    }

    let per_predicate: Vec<PredicateRecall> = (0..predicate_count)
        .map(|p| PredicateRecall {
            predicate_id: p,
            name: dataset
                .vocabulary
                .predicate_name(p)
                .unwrap_or_default()
                .to_string(),
            gt_count: gt_per_predicate[p],
            recall_at: (0..cfg.k_values.len())
                .map(|slot| {
                    if gt_per_predicate[p] == 0 {
                        0.0
                    } else {
                        hits_per_predicate[slot][p] as f64 / gt_per_predicate[p] as f64
                    }
                })
                .collect(),
        })
        .collect();

    let recalls: Vec<RecallAtK> = cfg
        .k_values
        .iter()
        .enumerate()
        .map(|(slot, &k)| {
            let recall = if total_gt == 0 {
                0.0
            } else {
                hits_at[slot] as f64 / total_gt as f64
            };
            let populated: Vec<f64> = per_predicate
                .iter()
                .filter(|p| p.gt_count > 0)
                .map(|p| p.recall_at[slot])
                .collect();
            let mean_recall = if populated.is_empty() {
                0.0
            } else {
                populated.iter().sum::<f64>() / populated.len() as f64
            };
            RecallAtK {
                k,
                recall,
                mean_recall,
            }
        })
        .collect();

    Ok(EvalReport {
        mode: cfg.mode,
        k_values: cfg.k_values.clone(),
        iou_threshold: cfg.iou_threshold,
        image_count: dataset.images.len(),
        gt_triplet_count: total_gt,
        recalls,
        per_predicate,
        pq: None,
    })
}

/// Per-class true/false positive counts and the IoU mass of the matches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PqClassCounts {
    pub iou_sum: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Accumulated segment-matching counts per class, mergeable across images.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PqStats {
    per_class: BTreeMap<usize, PqClassCounts>,
}

impl PqStats {
    pub fn merge(&mut self, other: &PqStats) {
        for (&class_id, counts) in &other.per_class {
            let slot = self.per_class.entry(class_id).or_default();
            slot.iou_sum += counts.iou_sum;
            slot.true_positives += counts.true_positives;
            slot.false_positives += counts.false_positives;
            slot.false_negatives += counts.false_negatives;
        }
    }

    pub fn per_class(&self) -> &BTreeMap<usize, PqClassCounts> {
        &self.per_class
    }

    /// Computes PQ / SQ / RQ per class and class-averaged; classes absent
    /// from both ground truth and prediction never enter the map.
    pub fn summarize(&self) -> PqSummary {
        let per_class: Vec<PqClassReport> = self
            .per_class
            .iter()
            .map(|(&class_id, c)| {
                let denom = c.true_positives as f64
                    + 0.5 * c.false_positives as f64
                    + 0.5 * c.false_negatives as f64;
                let (pq, rq) = if denom == 0.0 {
                    (0.0, 0.0)
                } else {
                    (c.iou_sum / denom, c.true_positives as f64 / denom)
                };
                let sq = if c.true_positives == 0 {
                    0.0
                } else {
                    c.iou_sum / c.true_positives as f64
                };
                PqClassReport {
                    class_id,
                    pq,
                    sq,
                    rq,
                    true_positives: c.true_positives,
                    false_positives: c.false_positives,
                    false_negatives: c.false_negatives,
                }
            })
            .collect();
        let n = per_class.len();
        let mean = |f: fn(&PqClassReport) -> f64| {
            if n == 0 {
                0.0
            } else {
                per_class.iter().map(f).sum::<f64>() / n as f64
            }
        };
        PqSummary {
            averaged: PqAverages {
                pq: mean(|c| c.pq),
                sq: mean(|c| c.sq),
                rq: mean(|c| c.rq),
                class_count: n,
            },
            per_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqClassReport {
    pub class_id: usize,
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqAverages {
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub class_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqSummary {
    pub averaged: PqAverages,
    pub per_class: Vec<PqClassReport>,
}

/// Segment-matching counts between two graphs over one canvas.
///
/// Segments match iff they carry the same class and their mask IoU exceeds
/// 0.5; disjointness within each graph makes that matching unique.
pub fn panoptic_quality(
    gt: &PanopticSceneGraph,
    pred: &PanopticSceneGraph,
) -> Result<PqStats> {
    if gt.canvas != pred.canvas {
        return Err(Error::canvas_mismatch(gt.canvas, pred.canvas));
    }
    let mut stats = PqStats::default();
    let mut classes: Vec<usize> = gt
        .instances
        .iter()
        .chain(pred.instances.iter())
        .map(|i| i.class_id)
        .collect();
    classes.sort_unstable();
    classes.dedup();

    for class_id in classes {
        let gt_segments: Vec<&SegmentMask> = gt
            .instances
            .iter()
            .filter(|i| i.class_id == class_id)
            .map(|i| i.mask())
            .collect();
        let pred_segments: Vec<&SegmentMask> = pred
            .instances
            .iter()
            .filter(|i| i.class_id == class_id)
            .map(|i| i.mask())
            .collect();
        let mut counts = PqClassCounts::default();
        let mut pred_used = vec![false; pred_segments.len()];
        for gt_mask in &gt_segments {
            let mut matched = false;
            for (p, pred_mask) in pred_segments.iter().enumerate() {
                if pred_used[p] {
                    continue;
                }
                let iou = mask_iou(gt_mask, pred_mask)?;
                if iou > PQ_IOU_THRESHOLD {
                    pred_used[p] = true;
                    counts.true_positives += 1;
                    counts.iou_sum += iou;
                    matched = true;
                    break;
                }
            }
            if !matched {
                counts.false_negatives += 1;
            }
        }
        counts.false_positives = pred_used.iter().filter(|&&u| !u).count();
        stats.per_class.insert(class_id, counts);
    }
    Ok(stats)
}

/// Panoptic quality accumulated over aligned image pairs, reduced in
/// image-id order.
pub fn corpus_panoptic_quality(gt: &PsgDataset, pred: &PsgDataset) -> Result<(PqStats, usize)> {
    let mut pred_by_id: HashMap<&str, &PanopticSceneGraph> = HashMap::new();
    for image in &pred.images {
        if pred_by_id
            .insert(image.image_id.as_str(), &image.graph)
            .is_some()
        {
            return Err(Error::DuplicateImage {
                image_id: image.image_id.clone(),
            });
        }
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for image in &gt.images {
        if seen.insert(image.image_id.as_str(), 0).is_some() {
            return Err(Error::DuplicateImage {
                image_id: image.image_id.clone(),
            });
        }
    }
    for image in &pred.images {
        if !seen.contains_key(image.image_id.as_str()) {
            return Err(Error::MissingImage {
                image_id: image.image_id.clone(),
            });
        }
    }
    let mut ordered: Vec<&crate::model::DatasetImage> = gt.images.iter().collect();
    ordered.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let per_image: Vec<Result<PqStats>> = ordered
        .par_iter()
        .map(|image| {
            let pred_graph =
                pred_by_id
                    .get(image.image_id.as_str())
                    .ok_or_else(|| Error::MissingImage {
                        image_id: image.image_id.clone(),
                    })?;
            panoptic_quality(&image.graph, pred_graph)
        })
        .collect();

    let mut total = PqStats::default();
    for stats in per_image {
        total.merge(&stats?);
    }
    Ok((total, gt.images.len()))
}
