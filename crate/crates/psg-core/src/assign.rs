//! Triplet matching: per-component match scores, a globally optimal
//! assignment solver, and the matched-pair training loss.
//!
//! The solver is an O(n·m·min(n,m)) shortest-augmenting-path algorithm over
//! dense float matrices. On top of the optimal value it applies a
//! deterministic tie-break: among all optimal assignments it returns the one
//! whose pair list (sorted by prediction index) is lexicographically smallest.
//! Scores within `1e-12 * (1 + |optimum|)` of the optimum are treated as tied.

use crate::error::{Error, Result};
use crate::mask::{ensure_same_canvas, SegmentMask, SoftMask};

/// Dense rows x cols score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "matrix data length {} does not match {rows}x{cols}",
                    data.len()
                ),
            });
        }
        Ok(ScoreMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != nc {
                return Err(Error::InvalidConfig {
                    reason: format!("row {i} has length {} but row 0 has {nc}", row.len()),
                });
            }
        }
        Ok(ScoreMatrix {
            rows: nr,
            cols: nc,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}

/// Injective pairing of prediction indices to ground-truth indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pairs: Vec<(usize, usize)>,
    total_score: f64,
}

impl Assignment {
    /// Matched `(prediction, ground_truth)` pairs, sorted by prediction index.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Sum of the score-matrix entries over the matched pairs.
    pub fn total_score(&self) -> f64 {
        self.total_score
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn gt_for_pred(&self, pred: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&pred, |&(p, _)| p)
            .ok()
            .map(|at| self.pairs[at].1)
    }
}

/// Shortest augmenting path assignment, minimizing, for `nr <= nc`.
/// Returns the column matched to each row.
fn sap_min_rows_le_cols(nr: usize, nc: usize, cost: &impl Fn(usize, usize) -> f64) -> Vec<usize> {
    debug_assert!(nr <= nc);
    let mut u = vec![0.0f64; nr];
    let mut v = vec![0.0f64; nc];
    let mut col4row = vec![usize::MAX; nr];
    let mut row4col = vec![usize::MAX; nc];

    for cur_row in 0..nr {
        let mut shortest = vec![f64::INFINITY; nc];
        let mut path = vec![usize::MAX; nc];
        let mut row_scanned = vec![false; nr];
        let mut col_done = vec![false; nc];
        let mut remaining: Vec<usize> = (0..nc).collect();

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let sink;
        loop {
            row_scanned[i] = true;
            let mut lowest = f64::INFINITY;
            let mut pick = usize::MAX;
            for (pos, &j) in remaining.iter().enumerate() {
                let reduced = min_val + cost(i, j) - u[i] - v[j];
                if reduced < shortest[j] {
                    shortest[j] = reduced;
                    path[j] = i;
                }
                if shortest[j] < lowest
                    || (shortest[j] == lowest && row4col[j] == usize::MAX && pick != usize::MAX)
                {
                    lowest = shortest[j];
                    pick = pos;
                }
            }
            min_val = lowest;
            let j = remaining[pick];
            col_done[j] = true;
            remaining.swap_remove(pick);
            if row4col[j] == usize::MAX {
                sink = j;
                break;
            }
            i = row4col[j];
        }

        u[cur_row] += min_val;
        for k in 0..nr {
            if row_scanned[k] && k != cur_row {
                u[k] += min_val - shortest[col4row[k]];
            }
        }
        for j in 0..nc {
            if col_done[j] {
                v[j] -= min_val - shortest[j];
            }
        }

        let mut j = sink;
        loop {
            let i = path[j];
            row4col[j] = i;
            std::mem::swap(&mut col4row[i], &mut j);
            if i == cur_row {
                break;
            }
        }
    }
    col4row
}

/// Optimal total under the maximize convention for an arbitrary sub-problem.
fn best_total(row_ids: &[usize], col_ids: &[usize], score: &impl Fn(usize, usize) -> f64) -> f64 {
    if row_ids.is_empty() || col_ids.is_empty() {
        return 0.0;
    }
    if row_ids.len() <= col_ids.len() {
        let cost = |a: usize, b: usize| -score(row_ids[a], col_ids[b]);
        let col4row = sap_min_rows_le_cols(row_ids.len(), col_ids.len(), &cost);
        col4row
            .iter()
            .enumerate()
            .map(|(a, &b)| score(row_ids[a], col_ids[b]))
            .sum()
    } else {
        let cost = |b: usize, a: usize| -score(row_ids[a], col_ids[b]);
        let row4col = sap_min_rows_le_cols(col_ids.len(), row_ids.len(), &cost);
        row4col
            .iter()
            .enumerate()
            .map(|(b, &a)| score(row_ids[a], col_ids[b]))
            .sum()
    }
}

/// Globally optimal one-to-one assignment of `min(rows, cols)` pairs.
///
/// With `maximize` the total score is maximized, otherwise minimized. Among
/// optimal assignments the lexicographically smallest pair list wins, so the
/// result is deterministic even on degenerate matrices. Non-finite entries
/// are rejected.
pub fn optimal_assignment(matrix: &ScoreMatrix, maximize: bool) -> Result<Assignment> {
    for row in 0..matrix.rows {
        for col in 0..matrix.cols {
            if !matrix.get(row, col).is_finite() {
                return Err(Error::NonFiniteScore { row, col });
            }
        }
    }
    let (nr, nc) = (matrix.rows, matrix.cols);
    if nr == 0 || nc == 0 {
        return Ok(Assignment {
            pairs: vec![],
            total_score: 0.0,
        });
    }

    // Work in maximize space; flip the sign once for the minimize convention.
    let sign = if maximize { 1.0 } else { -1.0 };
    let score = |i: usize, j: usize| sign * matrix.get(i, j);

    let all_rows: Vec<usize> = (0..nr).collect();
    let all_cols: Vec<usize> = (0..nc).collect();
    let optimum = best_total(&all_rows, &all_cols, &score);
    let tie_eps = 1e-12 * (1.0 + optimum.abs());

    // Fix pairs in prediction order, trying ground-truth indices ascending;
    // a candidate is kept when it still extends to the optimal total.
    let mut available = all_cols;
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(nr.min(nc));
    let mut prefix = 0.0f64;
    let mut needed = nr.min(nc);
    for i in 0..nr {
        if needed == 0 {
            break;
        }
        let tail: Vec<usize> = ((i + 1)..nr).collect();
        let mut chosen = None;
        for (pos, &j) in available.iter().enumerate() {
            let mut rest = available.clone();
            rest.remove(pos);
            let completion = best_total(&tail, &rest, &score);
            if prefix + score(i, j) + completion >= optimum - tie_eps {
                chosen = Some(j);
                break;
            }
        }
        if let Some(j) = chosen {
            prefix += score(i, j);
            pairs.push((i, j));
            available.retain(|&c| c != j);
            needed -= 1;
        } else {
            // no match keeps optimality, so this prediction stays unmatched;
            // only possible while enough later predictions remain
            debug_assert!(tail.len() >= needed);
        }
    }
    debug_assert_eq!(pairs.len(), nr.min(nc));

    let total_score = pairs.iter().map(|&(i, j)| matrix.get(i, j)).sum();
    Ok(Assignment { pairs, total_score })
}

/// Per-term weights for the match score and loss. All default to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeights {
    pub seg_subject: f64,
    pub seg_object: f64,
    pub cls_subject: f64,
    pub cls_predicate: f64,
    pub cls_object: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        TermWeights {
            seg_subject: 1.0,
            seg_object: 1.0,
            cls_subject: 1.0,
            cls_predicate: 1.0,
            cls_object: 1.0,
        }
    }
}

fn validate_distribution(name: &str, dist: &[f64]) -> Result<()> {
    if dist.len() < 2 {
        return Err(Error::InvalidDistribution {
            reason: format!("{name} needs at least one class plus the terminal slot"),
        });
    }
    let mut sum = 0.0;
    for &p in dist {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution {
                reason: format!("{name} has a negative or non-finite entry"),
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDistribution {
            reason: format!("{name} sums to {sum}, expected 1"),
        });
    }
    Ok(())
}

/// A predicted triplet: class distributions (each with a terminal
/// "no-triplet" slot at the last index) and soft masks for both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftTriplet {
    subject_class_dist: Vec<f64>,
    predicate_class_dist: Vec<f64>,
    object_class_dist: Vec<f64>,
    subject_soft_mask: SoftMask,
    object_soft_mask: SoftMask,
}

impl SoftTriplet {
    pub fn new(
        subject_class_dist: Vec<f64>,
        predicate_class_dist: Vec<f64>,
        object_class_dist: Vec<f64>,
        subject_soft_mask: SoftMask,
        object_soft_mask: SoftMask,
    ) -> Result<Self> {
        validate_distribution("subject distribution", &subject_class_dist)?;
        validate_distribution("predicate distribution", &predicate_class_dist)?;
        validate_distribution("object distribution", &object_class_dist)?;
        ensure_same_canvas(subject_soft_mask.canvas(), object_soft_mask.canvas())?;
        Ok(SoftTriplet {
            subject_class_dist,
            predicate_class_dist,
            object_class_dist,
            subject_soft_mask,
            object_soft_mask,
        })
    }

    pub fn subject_class_dist(&self) -> &[f64] {
        &self.subject_class_dist
    }

    pub fn predicate_class_dist(&self) -> &[f64] {
        &self.predicate_class_dist
    }

    pub fn object_class_dist(&self) -> &[f64] {
        &self.object_class_dist
    }

    pub fn subject_soft_mask(&self) -> &SoftMask {
        &self.subject_soft_mask
    }

    pub fn object_soft_mask(&self) -> &SoftMask {
        &self.object_soft_mask
    }
}

/// A ground-truth triplet with hard labels and nonempty binary masks.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTriplet {
    pub subject_label: usize,
    pub predicate_label: usize,
    pub object_label: usize,
    subject_mask: SegmentMask,
    object_mask: SegmentMask,
}

impl GroundTruthTriplet {
    pub fn new(
        subject_label: usize,
        predicate_label: usize,
        object_label: usize,
        subject_mask: SegmentMask,
        object_mask: SegmentMask,
    ) -> Result<Self> {
        if subject_mask.is_empty() || object_mask.is_empty() {
            return Err(Error::EmptyMask);
        }
        ensure_same_canvas(subject_mask.canvas(), object_mask.canvas())?;
        Ok(GroundTruthTriplet {
            subject_label,
            predicate_label,
            object_label,
            subject_mask,
            object_mask,
        })
    }

    pub fn subject_mask(&self) -> &SegmentMask {
        &self.subject_mask
    }

    pub fn object_mask(&self) -> &SegmentMask {
        &self.object_mask
    }
}

/// Probability mass the distribution puts on the true class.
pub fn class_match_score(dist: &[f64], gt_label: usize) -> Result<f64> {
    dist.get(gt_label)
        .copied()
        .ok_or(Error::LabelOutOfRange {
            label: gt_label,
            size: dist.len(),
        })
}

/// Dice coefficient `2 |p·g| / (Σp + Σg)` between a soft mask and a binary
/// ground-truth mask, with `0/0` defined as 1.
pub fn segment_match_score(soft: &SoftMask, gt: &SegmentMask) -> Result<f64> {
    ensure_same_canvas(soft.canvas(), gt.canvas())?;
    let overlap = soft.total_over(gt)?;
    let denom = soft.total() + gt.foreground_area() as f64;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok(2.0 * overlap / denom)
}

/// Weighted sum of the two segment scores and three class scores; in `[0, 5]`
/// at unit weights.
pub fn triplet_match_score_weighted(
    pred: &SoftTriplet,
    gt: &GroundTruthTriplet,
    weights: &TermWeights,
) -> Result<f64> {
    let seg_s = segment_match_score(&pred.subject_soft_mask, &gt.subject_mask)?;
    let seg_o = segment_match_score(&pred.object_soft_mask, &gt.object_mask)?;
    let cls_s = class_match_score(&pred.subject_class_dist, gt.subject_label)?;
    let cls_r = class_match_score(&pred.predicate_class_dist, gt.predicate_label)?;
    let cls_o = class_match_score(&pred.object_class_dist, gt.object_label)?;
    Ok(weights.seg_subject * seg_s
        + weights.seg_object * seg_o
        + weights.cls_subject * cls_s
        + weights.cls_predicate * cls_r
        + weights.cls_object * cls_o)
}

/// [`triplet_match_score_weighted`] at unit weights.
pub fn triplet_match_score(pred: &SoftTriplet, gt: &GroundTruthTriplet) -> Result<f64> {
    triplet_match_score_weighted(pred, gt, &TermWeights::default())
}

/// Optimal assignment of predictions to ground-truth triplets under the
/// summed match score (maximize convention).
pub fn match_triplets(preds: &[SoftTriplet], gts: &[GroundTruthTriplet]) -> Result<Assignment> {
    let mut data = Vec::with_capacity(preds.len() * gts.len());
    for pred in preds {
        for gt in gts {
            data.push(triplet_match_score(pred, gt)?);
        }
    }
    let matrix = ScoreMatrix::new(preds.len(), gts.len(), data)?;
    optimal_assignment(&matrix, true)
}

fn cross_entropy(dist: &[f64], label: usize) -> Result<f64> {
    let p = class_match_score(dist, label)?;
    Ok(-p.ln())
}

fn validate_assignment(
    assignment: &Assignment,
    n_preds: usize,
    n_gts: usize,
) -> Result<()> {
    let expected = n_preds.min(n_gts);
    if assignment.pairs.len() != expected {
        return Err(Error::InvalidAssignment {
            reason: format!(
                "{} pairs, expected {expected} for {n_preds} predictions and {n_gts} ground truths",
                assignment.pairs.len()
            ),
        });
    }
    let mut preds_seen = vec![false; n_preds];
    let mut gts_seen = vec![false; n_gts];
    for &(p, g) in &assignment.pairs {
        if p >= n_preds || g >= n_gts {
            return Err(Error::InvalidAssignment {
                reason: format!("pair ({p},{g}) out of range"),
            });
        }
        if preds_seen[p] || gts_seen[g] {
            return Err(Error::InvalidAssignment {
                reason: format!("pair ({p},{g}) repeats an endpoint"),
            });
        }
        preds_seen[p] = true;
        gts_seen[g] = true;
    }
    Ok(())
}

/// Total loss over an assignment, with per-term weights.
///
/// Matched pairs contribute cross-entropy on the three label heads plus a
/// Dice loss (1 − Dice) on both masks; unmatched predictions contribute
/// cross-entropy toward the terminal "no-triplet" slot on all three heads.
pub fn total_loss_weighted(
    preds: &[SoftTriplet],
    gts: &[GroundTruthTriplet],
    assignment: &Assignment,
    weights: &TermWeights,
) -> Result<f64> {
    validate_assignment(assignment, preds.len(), gts.len())?;
    let mut loss = 0.0f64;
    let mut matched = vec![false; preds.len()];
    for &(p, g) in &assignment.pairs {
        matched[p] = true;
        let pred = &preds[p];
        let gt = &gts[g];
        loss += weights.cls_subject * cross_entropy(&pred.subject_class_dist, gt.subject_label)?;
        loss +=
            weights.cls_predicate * cross_entropy(&pred.predicate_class_dist, gt.predicate_label)?;
        loss += weights.cls_object * cross_entropy(&pred.object_class_dist, gt.object_label)?;
        loss += weights.seg_subject
            * (1.0 - segment_match_score(&pred.subject_soft_mask, &gt.subject_mask)?);
        loss += weights.seg_object
            * (1.0 - segment_match_score(&pred.object_soft_mask, &gt.object_mask)?);
    }
    for (p, pred) in preds.iter().enumerate() {
        if matched[p] {
            continue;
        }
        let terminal_s = pred.subject_class_dist.len() - 1;
        let terminal_r = pred.predicate_class_dist.len() - 1;
        let terminal_o = pred.object_class_dist.len() - 1;
        loss += weights.cls_subject * cross_entropy(&pred.subject_class_dist, terminal_s)?;
        loss += weights.cls_predicate * cross_entropy(&pred.predicate_class_dist, terminal_r)?;
        loss += weights.cls_object * cross_entropy(&pred.object_class_dist, terminal_o)?;
    }
    Ok(loss)
}

/// [`total_loss_weighted`] at unit weights.
pub fn total_loss(
    preds: &[SoftTriplet],
    gts: &[GroundTruthTriplet],
    assignment: &Assignment,
) -> Result<f64> {
    total_loss_weighted(preds, gts, assignment, &TermWeights::default())
}
