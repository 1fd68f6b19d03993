//! Bit-exact run-length mask algebra.
//!
//! Binary masks are stored as alternating run lengths over the row-major
//! flattened pixel grid, starting with a zero-run (which may have length 0).
//! All set operations (IoU, union, tightest box) work directly on the runs;
//! dense [`Bitmap`]s exist for encoding, decoding, and per-pixel merging.
//!
//! Boxes use half-open `[x0, x1) x [y0, y1)` coordinates so widths and areas
//! are exact integer subtractions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel grid dimensions shared by every mask of one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SceneCanvas {
    pub height: u32,
    pub width: u32,
}

impl SceneCanvas {
    pub fn new(height: u32, width: u32) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidConfig {
                reason: format!("canvas {height}x{width} must be at least 1x1"),
            });
        }
        Ok(SceneCanvas { height, width })
    }

    pub fn pixel_count(&self) -> usize {
        self.height as usize * self.width as usize
    }
}

pub(crate) fn ensure_same_canvas(a: SceneCanvas, b: SceneCanvas) -> Result<()> {
    if a != b {
        return Err(Error::canvas_mismatch(a, b));
    }
    Ok(())
}

/// Axis-aligned box with half-open extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::DegenerateBox { x0, y0, x1, y1 });
        }
        Ok(BBox { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }
}

/// Area-IoU of two boxes. Touching edges overlap on zero area.
pub fn bbox_iou(a: BBox, b: BBox) -> f64 {
    let ix0 = a.x0.max(b.x0);
    let iy0 = a.y0.max(b.y0);
    let ix1 = a.x1.min(b.x1);
    let iy1 = a.y1.min(b.y1);
    if ix0 >= ix1 || iy0 >= iy1 {
        return 0.0;
    }
    let inter = u64::from(ix1 - ix0) * u64::from(iy1 - iy0);
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Run-length-encoded binary mask.
///
/// The run list alternates zero-runs and one-runs starting with a zero-run;
/// only the leading zero-run may be empty, and the runs sum to the canvas
/// pixel count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentMask {
    canvas: SceneCanvas,
    runs: Vec<usize>,
}

impl SegmentMask {
    /// Validates the run-list invariants.
    pub fn from_runs(canvas: SceneCanvas, runs: Vec<usize>) -> Result<Self> {
        let sum: u64 = runs.iter().map(|&r| r as u64).sum();
        if sum != canvas.pixel_count() as u64 {
            return Err(Error::RunLengthMismatch {
                sum,
                expected: canvas.pixel_count() as u64,
            });
        }
        for (i, &r) in runs.iter().enumerate().skip(1) {
            if r == 0 {
                return Err(Error::InteriorZeroRun { index: i });
            }
        }
        if runs.is_empty() {
            // canvas has >= 1 pixel, so an empty run list cannot sum correctly
            unreachable!("empty run list rejected by the sum check");
        }
        Ok(SegmentMask { canvas, runs })
    }

    /// All-background mask.
    pub fn empty(canvas: SceneCanvas) -> Self {
        SegmentMask {
            canvas,
            runs: vec![canvas.pixel_count()],
        }
    }

    /// Mask from sorted, disjoint `[start, end)` index intervals; adjacent
    /// intervals coalesce into one run.
    pub(crate) fn from_intervals(canvas: SceneCanvas, intervals: &[(usize, usize)]) -> Self {
        let total = canvas.pixel_count();
        let mut runs = Vec::with_capacity(intervals.len() * 2 + 1);
        let mut pos = 0usize;
        for &(s, e) in intervals {
            debug_assert!(s >= pos && s < e && e <= total);
            if s == pos && runs.len() >= 2 {
                *runs.last_mut().expect("one-run just pushed") += e - s;
            } else {
                runs.push(s - pos);
                runs.push(e - s);
            }
            pos = e;
        }
        if pos < total || runs.is_empty() {
            runs.push(total - pos);
        }
        SegmentMask { canvas, runs }
    }

    /// Filled axis-aligned rectangle.
    pub fn from_rect(canvas: SceneCanvas, rect: BBox) -> Result<Self> {
        if rect.x1 > canvas.width || rect.y1 > canvas.height {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "rect ({},{},{},{}) exceeds canvas {}x{}",
                    rect.x0, rect.y0, rect.x1, rect.y1, canvas.height, canvas.width
                ),
            });
        }
        let w = canvas.width as usize;
        let intervals: Vec<(usize, usize)> = (rect.y0..rect.y1)
            .map(|y| {
                let row = y as usize * w;
                (row + rect.x0 as usize, row + rect.x1 as usize)
            })
            .collect();
        Ok(SegmentMask::from_intervals(canvas, &intervals))
    }

    pub fn canvas(&self) -> SceneCanvas {
        self.canvas
    }

    pub fn runs(&self) -> &[usize] {
        &self.runs
    }

    /// Number of foreground pixels (sum of the one-runs).
    pub fn foreground_area(&self) -> usize {
        self.runs.iter().skip(1).step_by(2).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.foreground_area() == 0
    }

    /// Iterates the foreground `[start, end)` intervals over the flat grid.
    pub(crate) fn one_intervals(&self) -> OneIntervals<'_> {
        OneIntervals {
            runs: &self.runs,
            index: 0,
            pos: 0,
        }
    }
}

pub(crate) struct OneIntervals<'a> {
    runs: &'a [usize],
    index: usize,
    pos: usize,
}

impl Iterator for OneIntervals<'_> {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        while self.index < self.runs.len() {
            let len = self.runs[self.index];
            let is_one = self.index % 2 == 1;
            let start = self.pos;
            self.pos += len;
            self.index += 1;
            if is_one && len > 0 {
                return Some((start, start + len));
            }
        }
        None
    }
}

/// Dense row-major binary mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    canvas: SceneCanvas,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn new(canvas: SceneCanvas, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != canvas.pixel_count() {
            return Err(Error::RunLengthMismatch {
                sum: bits.len() as u64,
                expected: canvas.pixel_count() as u64,
            });
        }
        Ok(Bitmap { canvas, bits })
    }

    pub fn blank(canvas: SceneCanvas) -> Self {
        Bitmap {
            canvas,
            bits: vec![false; canvas.pixel_count()],
        }
    }

    pub fn canvas(&self) -> SceneCanvas {
        self.canvas
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.canvas.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.canvas.width as usize + x as usize] = value;
    }
}

/// Encode a dense bitmap into canonical run-length form.
pub fn rle_encode(bitmap: &Bitmap) -> SegmentMask {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0usize;
    for &bit in &bitmap.bits {
        if bit == current {
            len += 1;
        } else {
            runs.push(len);
            current = bit;
            len = 1;
        }
    }
    runs.push(len);
    SegmentMask {
        canvas: bitmap.canvas,
        runs,
    }
}

/// Decode a run-length mask into a dense bitmap.
pub fn rle_decode(mask: &SegmentMask) -> Bitmap {
    let mut bits = vec![false; mask.canvas.pixel_count()];
    for (start, end) in mask.one_intervals() {
        for bit in &mut bits[start..end] {
            *bit = true;
        }
    }
    Bitmap {
        canvas: mask.canvas,
        bits,
    }
}

fn intersection_area(a: &SegmentMask, b: &SegmentMask) -> usize {
    let mut inter = 0usize;
    let mut it_a = a.one_intervals();
    let mut it_b = b.one_intervals();
    let mut cur_a = it_a.next();
    let mut cur_b = it_b.next();
    while let (Some(x), Some(y)) = (cur_a, cur_b) {
        let lo = x.0.max(y.0);
        let hi = x.1.min(y.1);
        if lo < hi {
            inter += hi - lo;
        }
        if x.1 <= y.1 {
            cur_a = it_a.next();
        } else {
            cur_b = it_b.next();
        }
    }
    inter
}

/// Mask IoU `|a ∩ b| / |a ∪ b|`, with `0/0` defined as 0.
pub fn mask_iou(a: &SegmentMask, b: &SegmentMask) -> Result<f64> {
    ensure_same_canvas(a.canvas, b.canvas)?;
    let inter = intersection_area(a, b);
    let union = a.foreground_area() + b.foreground_area() - inter;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Minimal half-open box containing every foreground pixel.
pub fn tightest_bbox(mask: &SegmentMask) -> Result<BBox> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let w = mask.canvas.width as usize;
    let mut x0 = u32::MAX;
    let mut y0 = u32::MAX;
    let mut x1 = 0u32;
    let mut y1 = 0u32;
    for (start, end) in mask.one_intervals() {
        let last = end - 1;
        let row_start = (start / w) as u32;
        let row_end = (last / w) as u32;
        y0 = y0.min(row_start);
        y1 = y1.max(row_end + 1);
        if row_start == row_end {
            x0 = x0.min((start % w) as u32);
            x1 = x1.max((last % w) as u32 + 1);
        } else {
            // a run spanning rows touches both the left and right edge
            x0 = 0;
            x1 = mask.canvas.width;
        }
    }
    BBox::new(x0, y0, x1, y1)
}

/// Per-pixel OR of two masks on the same canvas.
pub fn mask_union(a: &SegmentMask, b: &SegmentMask) -> Result<SegmentMask> {
    ensure_same_canvas(a.canvas, b.canvas)?;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    let mut it_a = a.one_intervals();
    let mut it_b = b.one_intervals();
    let mut cur_a = it_a.next();
    let mut cur_b = it_b.next();
    let push = |merged: &mut Vec<(usize, usize)>, iv: (usize, usize)| {
        if let Some(last) = merged.last_mut() {
            if iv.0 <= last.1 {
                last.1 = last.1.max(iv.1);
                return;
            }
        }
        merged.push(iv);
    };
    loop {
        match (cur_a, cur_b) {
            (Some(x), Some(y)) => {
                if x.0 <= y.0 {
                    push(&mut merged, x);
                    cur_a = it_a.next();
                } else {
                    push(&mut merged, y);
                    cur_b = it_b.next();
                }
            }
            (Some(x), None) => {
                push(&mut merged, x);
                cur_a = it_a.next();
            }
            (None, Some(y)) => {
                push(&mut merged, y);
                cur_b = it_b.next();
            }
            (None, None) => break,
        }
    }
    Ok(SegmentMask::from_intervals(a.canvas, &merged))
}

/// Per-pixel scores in `[0, 1]`; binary masks are the 0/1 special case.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    canvas: SceneCanvas,
    scores: Vec<f64>,
}

impl SoftMask {
    pub fn new(canvas: SceneCanvas, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != canvas.pixel_count() {
            return Err(Error::RunLengthMismatch {
                sum: scores.len() as u64,
                expected: canvas.pixel_count() as u64,
            });
        }
        for (index, &value) in scores.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ScoreOutOfRange { value, index });
            }
        }
        Ok(SoftMask { canvas, scores })
    }

    pub fn from_segment_mask(mask: &SegmentMask) -> Self {
        let mut scores = vec![0.0; mask.canvas.pixel_count()];
        for (start, end) in mask.one_intervals() {
            for s in &mut scores[start..end] {
                *s = 1.0;
            }
        }
        SoftMask {
            canvas: mask.canvas,
            scores,
        }
    }

    pub fn canvas(&self) -> SceneCanvas {
        self.canvas
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Sum of all scores.
    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    /// Sum of scores over the foreground of a binary mask.
    pub fn total_over(&self, mask: &SegmentMask) -> Result<f64> {
        ensure_same_canvas(self.canvas, mask.canvas)?;
        let mut acc = 0.0;
        for (start, end) in mask.one_intervals() {
            acc += self.scores[start..end].iter().sum::<f64>();
        }
        Ok(acc)
    }
}

/// A soft mask carrying a class label and a tie-breaking priority score.
#[derive(Debug, Clone)]
pub struct LabeledSoftMask {
    pub mask: SoftMask,
    pub label: usize,
    pub priority: f64,
}

/// Per-pixel label assignment; `None` is the void label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    canvas: SceneCanvas,
    labels: Vec<Option<usize>>,
}

impl LabelMap {
    pub fn canvas(&self) -> SceneCanvas {
        self.canvas
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// Binary mask of the pixels carrying `label`.
    pub fn label_mask(&self, label: usize) -> Bitmap {
        let bits = self.labels.iter().map(|&l| l == Some(label)).collect();
        Bitmap {
            canvas: self.canvas,
            bits,
        }
    }

    /// Distinct labels present, ascending.
    pub fn present_labels(&self) -> Vec<usize> {
        let mut labels: Vec<usize> = self.labels.iter().flatten().copied().collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

/// Merge overlapping soft masks into a single disjoint labeling.
///
/// Each pixel takes the label of the part with the highest score there among
/// parts scoring above 0; all-zero pixels stay void. Ties go to the higher
/// priority, then to the lower part index.
pub fn pixelwise_argmax_merge(parts: &[LabeledSoftMask]) -> Result<LabelMap> {
    if parts.is_empty() {
        return Err(Error::InvalidConfig {
            reason: "pixelwise merge needs at least one part".into(),
        });
    }
    let canvas = parts[0].mask.canvas;
    for part in &parts[1..] {
        ensure_same_canvas(canvas, part.mask.canvas)?;
    }
    let mut labels = vec![None; canvas.pixel_count()];
    let mut best_score = vec![0.0f64; canvas.pixel_count()];
    let mut best_priority = vec![f64::NEG_INFINITY; canvas.pixel_count()];
    for part in parts {
        for (pixel, &score) in part.mask.scores.iter().enumerate() {
            if score <= 0.0 {
                continue;
            }
            let wins = score > best_score[pixel]
                || (score == best_score[pixel] && part.priority > best_priority[pixel]);
            if labels[pixel].is_none() || wins {
                labels[pixel] = Some(part.label);
                best_score[pixel] = score;
                best_priority[pixel] = part.priority;
            }
        }
    }
    Ok(LabelMap { canvas, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canvas(h: u32, w: u32) -> SceneCanvas {
        SceneCanvas::new(h, w).unwrap()
    }

    fn bitmap_from(h: u32, w: u32, bits: &[u8]) -> Bitmap {
        Bitmap::new(canvas(h, w), bits.iter().map(|&b| b != 0).collect()).unwrap()
    }

    #[test]
    fn encode_all_zeros() {
        let mask = rle_encode(&bitmap_from(2, 2, &[0, 0, 0, 0]));
        assert_eq!(mask.runs(), &[4]);
    }

    #[test]
    fn encode_all_ones() {
        let mask = rle_encode(&bitmap_from(2, 2, &[1, 1, 1, 1]));
        assert_eq!(mask.runs(), &[0, 4]);
    }

    #[test]
    fn encode_checkerboard() {
        let mask = rle_encode(&bitmap_from(2, 2, &[0, 1, 1, 0]));
        assert_eq!(mask.runs(), &[1, 2, 1]);
    }

    #[test]
    fn decode_examples() {
        let c = canvas(2, 2);
        let zeros = rle_decode(&SegmentMask::from_runs(c, vec![4]).unwrap());
        assert_eq!(zeros, bitmap_from(2, 2, &[0, 0, 0, 0]));
        let ones = rle_decode(&SegmentMask::from_runs(c, vec![0, 4]).unwrap());
        assert_eq!(ones, bitmap_from(2, 2, &[1, 1, 1, 1]));
        let checker = rle_decode(&SegmentMask::from_runs(c, vec![1, 2, 1]).unwrap());
        assert_eq!(checker, bitmap_from(2, 2, &[0, 1, 1, 0]));
    }

    #[test]
    fn run_sum_must_match_canvas() {
        let err = SegmentMask::from_runs(canvas(2, 2), vec![3]).unwrap_err();
        assert!(err.to_string().contains("length-mismatch"));
    }

    #[test]
    fn interior_zero_run_rejected() {
        let err = SegmentMask::from_runs(canvas(2, 2), vec![1, 0, 3]).unwrap_err();
        assert!(err.to_string().contains("zero-run"));
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let c = canvas(4, 4);
        let a = SegmentMask::from_rect(c, BBox::new(0, 0, 2, 2).unwrap()).unwrap();
        let b = SegmentMask::from_rect(c, BBox::new(2, 2, 4, 4).unwrap()).unwrap();
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn iou_half_overlap() {
        // 2x2 block vs its 1x2 half on an 8x8 canvas: |∩|=2, |∪|=4.
        let c = canvas(8, 8);
        let block = SegmentMask::from_rect(c, BBox::new(2, 2, 4, 4).unwrap()).unwrap();
        let half = SegmentMask::from_rect(c, BBox::new(2, 2, 3, 4).unwrap()).unwrap();
        assert_eq!(mask_iou(&block, &half).unwrap(), 0.5);
    }

    #[test]
    fn iou_empty_vs_empty_is_zero() {
        let c = canvas(3, 3);
        let e = SegmentMask::empty(c);
        assert_eq!(mask_iou(&e, &e).unwrap(), 0.0);
    }

    #[test]
    fn iou_canvas_mismatch() {
        let a = SegmentMask::empty(canvas(2, 2));
        let b = SegmentMask::empty(canvas(2, 3));
        assert!(mask_iou(&a, &b)
            .unwrap_err()
            .to_string()
            .contains("canvas-mismatch"));
    }

    #[test]
    fn tightest_bbox_single_pixel() {
        let c = canvas(8, 8);
        let m = SegmentMask::from_rect(c, BBox::new(3, 5, 4, 6).unwrap()).unwrap();
        assert_eq!(tightest_bbox(&m).unwrap(), BBox::new(3, 5, 4, 6).unwrap());
    }

    #[test]
    fn tightest_bbox_full_canvas() {
        let c = canvas(5, 7);
        let m = SegmentMask::from_rect(c, BBox::new(0, 0, 7, 5).unwrap()).unwrap();
        assert_eq!(tightest_bbox(&m).unwrap(), BBox::new(0, 0, 7, 5).unwrap());
    }

    #[test]
    fn tightest_bbox_l_shape() {
        let c = canvas(8, 8);
        let mut bitmap = Bitmap::blank(c);
        bitmap.set(1, 1, true);
        bitmap.set(4, 2, true);
        let m = rle_encode(&bitmap);
        assert_eq!(tightest_bbox(&m).unwrap(), BBox::new(1, 1, 5, 3).unwrap());
    }

    #[test]
    fn tightest_bbox_empty_mask() {
        let err = tightest_bbox(&SegmentMask::empty(canvas(2, 2))).unwrap_err();
        assert!(err.to_string().contains("empty-mask"));
    }

    #[test]
    fn bbox_iou_examples() {
        let a = BBox::new(0, 0, 2, 2).unwrap();
        assert_eq!(bbox_iou(a, a), 1.0);
        let touching = BBox::new(2, 0, 4, 2).unwrap();
        assert_eq!(bbox_iou(a, touching), 0.0);
        let b = BBox::new(1, 0, 3, 2).unwrap();
        assert!((bbox_iou(a, b) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(BBox::new(2, 0, 2, 3)
            .unwrap_err()
            .to_string()
            .contains("degenerate-box"));
    }

    #[test]
    fn union_idempotent_and_identity() {
        let c = canvas(4, 4);
        let a = SegmentMask::from_rect(c, BBox::new(1, 1, 3, 3).unwrap()).unwrap();
        assert_eq!(mask_union(&a, &a).unwrap(), a);
        assert_eq!(mask_union(&a, &SegmentMask::empty(c)).unwrap(), a);
    }

    #[test]
    fn union_of_disjoint_pixels() {
        let c = canvas(4, 4);
        let a = SegmentMask::from_rect(c, BBox::new(0, 0, 1, 1).unwrap()).unwrap();
        let b = SegmentMask::from_rect(c, BBox::new(3, 3, 4, 4).unwrap()).unwrap();
        let u = mask_union(&a, &b).unwrap();
        assert_eq!(u.foreground_area(), 2);
    }

    #[test]
    fn union_coalesces_adjacent_runs() {
        let c = canvas(1, 4);
        let a = SegmentMask::from_runs(c, vec![0, 2, 2]).unwrap();
        let b = SegmentMask::from_runs(c, vec![2, 2]).unwrap();
        let u = mask_union(&a, &b).unwrap();
        assert_eq!(u.runs(), &[0, 4]);
    }

    fn soft(c: SceneCanvas, scores: Vec<f64>) -> SoftMask {
        SoftMask::new(c, scores).unwrap()
    }

    #[test]
    fn merge_single_mask() {
        let c = canvas(2, 2);
        let parts = vec![LabeledSoftMask {
            mask: soft(c, vec![1.0, 0.0, 0.0, 1.0]),
            label: 7,
            priority: 0.5,
        }];
        let map = pixelwise_argmax_merge(&parts).unwrap();
        assert_eq!(map.labels(), &[Some(7), None, None, Some(7)]);
    }

    #[test]
    fn merge_disjoint_masks() {
        let c = canvas(2, 2);
        let parts = vec![
            LabeledSoftMask {
                mask: soft(c, vec![1.0, 0.0, 0.0, 0.0]),
                label: 1,
                priority: 0.1,
            },
            LabeledSoftMask {
                mask: soft(c, vec![0.0, 0.0, 0.0, 1.0]),
                label: 2,
                priority: 0.9,
            },
        ];
        let map = pixelwise_argmax_merge(&parts).unwrap();
        assert_eq!(map.labels(), &[Some(1), None, None, Some(2)]);
    }

    #[test]
    fn merge_overlap_takes_higher_score() {
        let c = canvas(1, 2);
        let parts = vec![
            LabeledSoftMask {
                mask: soft(c, vec![0.6, 0.6]),
                label: 1,
                priority: 0.9,
            },
            LabeledSoftMask {
                mask: soft(c, vec![0.9, 0.0]),
                label: 2,
                priority: 0.1,
            },
        ];
        let map = pixelwise_argmax_merge(&parts).unwrap();
        assert_eq!(map.labels(), &[Some(2), Some(1)]);
    }

    #[test]
    fn merge_tie_breaks_on_priority_then_index() {
        let c = canvas(1, 1);
        let by_priority = vec![
            LabeledSoftMask {
                mask: soft(c, vec![0.5]),
                label: 1,
                priority: 0.1,
            },
            LabeledSoftMask {
                mask: soft(c, vec![0.5]),
                label: 2,
                priority: 0.7,
            },
        ];
        assert_eq!(
            pixelwise_argmax_merge(&by_priority).unwrap().labels(),
            &[Some(2)]
        );
        let by_index = vec![
            LabeledSoftMask {
                mask: soft(c, vec![0.5]),
                label: 1,
                priority: 0.7,
            },
            LabeledSoftMask {
                mask: soft(c, vec![0.5]),
                label: 2,
                priority: 0.7,
            },
        ];
        assert_eq!(
            pixelwise_argmax_merge(&by_index).unwrap().labels(),
            &[Some(1)]
        );
    }

    #[test]
    fn merge_canvas_mismatch() {
        let parts = vec![
            LabeledSoftMask {
                mask: soft(canvas(1, 1), vec![1.0]),
                label: 0,
                priority: 0.0,
            },
            LabeledSoftMask {
                mask: soft(canvas(1, 2), vec![1.0, 1.0]),
                label: 1,
                priority: 0.0,
            },
        ];
        assert!(pixelwise_argmax_merge(&parts)
            .unwrap_err()
            .to_string()
            .contains("canvas-mismatch"));
    }

    #[test]
    fn soft_mask_rejects_out_of_range() {
        let err = SoftMask::new(canvas(1, 2), vec![0.5, 1.5]).unwrap_err();
        assert!(err.to_string().contains("score-out-of-range"));
    }
}
