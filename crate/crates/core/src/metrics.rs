//! Evaluation protocols: boundary-line P/R/F, text-line detection H-mean
//! across IoU thresholds, and correct/accuracy rates of the ordered text.
//!
//! Every report carries its raw counts so pages can be micro-averaged by
//! summing counts before forming ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou_quad, segment_pair_distance, LineSegment, Quad};
use crate::rescore::{edit_script, EditKind};

/// Precision, recall and their harmonic mean from match counts. Both sides
/// empty counts as perfect; an empty side otherwise scores 0.
pub fn prf(tp: usize, n_pred: usize, n_gt: usize) -> (f64, f64, f64) {
    if n_pred == 0 && n_gt == 0 {
        return (1.0, 1.0, 1.0);
    }
    let p = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
    let r = if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineMatch {
    pub pred: usize,
    pub gt: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub n_pred: usize,
    pub n_gt: usize,
}

impl MatchCounts {
    pub fn add(&mut self, other: &MatchCounts) {
        self.tp += other.tp;
        self.n_pred += other.n_pred;
        self.n_gt += other.n_gt;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineEvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub counts: MatchCounts,
    pub matches: Vec<LineMatch>,
}

impl LineEvalReport {
    pub fn from_counts(counts: MatchCounts, matches: Vec<LineMatch>) -> Self {
        let (precision, recall, f_score) = prf(counts.tp, counts.n_pred, counts.n_gt);
        Self {
            precision,
            recall,
            f_score,
            counts,
            matches,
        }
    }
}

/// Greedy one-to-one matching of `(pred, gt, key)` candidates in the order
/// given.
fn greedy_match<T: Copy>(
    candidates: &[(usize, usize, T)],
    n_pred: usize,
    n_gt: usize,
) -> Vec<(usize, usize, T)> {
    let mut pred_used = vec![false; n_pred];
    let mut gt_used = vec![false; n_gt];
    let mut out = Vec::new();
    for &(p, g, key) in candidates {
        if !pred_used[p] && !gt_used[g] {
            pred_used[p] = true;
            gt_used[g] = true;
            out.push((p, g, key));
        }
    }
    out
}

/// Boundary-line evaluation.
///
/// Candidate pairs closer than `dist_threshold` (sum of endpoint distances)
/// are matched greedily by ascending distance; each match is a true
/// positive.
pub fn eval_lines(
    pred: &[LineSegment],
    gt: &[LineSegment],
    dist_threshold: f64,
) -> LineEvalReport {
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let d = segment_pair_distance(p, g);
            if d < dist_threshold {
                candidates.push((i, j, d));
            }
        }
    }
    candidates.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let matches: Vec<LineMatch> = greedy_match(&candidates, pred.len(), gt.len())
        .into_iter()
        .map(|(pred, gt, distance)| LineMatch { pred, gt, distance })
        .collect();
    let counts = MatchCounts {
        tp: matches.len(),
        n_pred: pred.len(),
        n_gt: gt.len(),
    };
    LineEvalReport::from_counts(counts, matches)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetThresholdResult {
    pub iou_threshold: f64,
    pub counts: MatchCounts,
    pub precision: f64,
    pub recall: f64,
    pub h_mean: f64,
}

impl DetThresholdResult {
    pub fn from_counts(iou_threshold: f64, counts: MatchCounts) -> Self {
        let (precision, recall, h_mean) = prf(counts.tp, counts.n_pred, counts.n_gt);
        Self {
            iou_threshold,
            counts,
            precision,
            recall,
            h_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetEvalReport {
    pub thresholds: Vec<DetThresholdResult>,
}

impl DetEvalReport {
    pub fn h_mean(&self, iou_threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .find(|t| (t.iou_threshold - iou_threshold).abs() < 1e-12)
            .map(|t| t.h_mean)
    }
}

/// Text-line detection H-mean at each IoU threshold.
///
/// Pairs are matched greedily by descending IoU; a pair counts when its IoU
/// is at least the threshold.
pub fn eval_detection(pred: &[Quad], gt: &[Quad], thresholds: &[f64]) -> Result<DetEvalReport> {
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::Config(format!("IoU threshold {t} outside (0, 1]")));
    }
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let iou = iou_quad(p, g);
            if iou > 0.0 {
                candidates.push((i, j, iou));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let results = thresholds
        .iter()
        .map(|&t| {
            let eligible: Vec<_> = candidates.iter().copied().filter(|c| c.2 >= t).collect();
            let tp = greedy_match(&eligible, pred.len(), gt.len()).len();
            DetThresholdResult::from_counts(
                t,
                MatchCounts {
                    tp,
                    n_pred: pred.len(),
                    n_gt: gt.len(),
                },
            )
        })
        .collect();
    Ok(DetEvalReport {
        thresholds: results,
    })
}

/// Alignment counts against ground-truth text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextCounts {
    /// Ground-truth length.
    pub nt: usize,
    /// Deletions: ground-truth characters missing from the prediction.
    pub de: usize,
    /// Substitutions.
    pub se: usize,
    /// Insertions: extra predicted characters.
    pub ie: usize,
}

impl TextCounts {
    pub fn add(&mut self, other: &TextCounts) {
        self.nt += other.nt;
        self.de += other.de;
        self.se += other.se;
        self.ie += other.ie;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextEvalReport {
    #[serde(flatten)]
    pub counts: TextCounts,
    pub cr: f64,
    pub ar: f64,
}

impl TextEvalReport {
    pub fn from_counts(counts: TextCounts) -> Result<Self> {
        if counts.nt == 0 {
            return Err(Error::EmptyGroundTruth);
        }
        let nt = counts.nt as f64;
        let correct = nt - counts.de as f64 - counts.se as f64;
        Ok(Self {
            counts,
            cr: correct / nt,
            ar: (correct - counts.ie as f64) / nt,
        })
    }
}

/// Alignment counts of `pred` against `gt`, whitespace removed from both.
pub fn text_counts(pred: &str, gt: &str) -> TextCounts {
    let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<Vec<char>>();
    let (pred, gt) = (strip(pred), strip(gt));
    let mut counts = TextCounts {
        nt: gt.len(),
        ..TextCounts::default()
    };
    for op in edit_script(&gt, &pred) {
        match op.kind {
            EditKind::Equal => {}
            EditKind::Replace => counts.se += 1,
            EditKind::Delete => counts.de += 1,
            EditKind::Insert => counts.ie += 1,
        }
    }
    counts
}

/// Correct rate and accuracy rate of `pred` against `gt`.
pub fn eval_text(pred: &str, gt: &str) -> Result<TextEvalReport> {
    TextEvalReport::from_counts(text_counts(pred, gt))
}
