//! Frame-level classification metrics and the segment-level SF1 / ASF1 /
//! mASF1 evaluation stack, plus accuracy binned by distance to the nearest
//! ground-truth segment edge.
//!
//! Segment scoring pools segments of one class across all test videos,
//! matches predictions to ground truth one-to-one greedily by descending
//! IoU with a strict `IoU > t` criterion, and averages SF1 over a grid of
//! 100 thresholds `t = 0.00, 0.01, ..., 0.99`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::timeline::{LabelSequence, Segment, SkillClass, Timeline, NUM_CLASSES};

/// Number of thresholds in the default SF1 grid.
pub const DEFAULT_THRESHOLD_COUNT: usize = 100;

/// Default bin width (frames) for edge-distance accuracy.
pub const DEFAULT_EDGE_BIN_WIDTH: usize = 5;

/// Evenly spaced thresholds `i / count` for `i in 0..count`.
pub fn thresholds(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64 / count as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassFrameMetrics {
    pub class: SkillClass,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ground-truth frame count for this class.
    pub support: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassFrameMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// `confusion[gt][pred]`; each row sums to that class's support.
    pub confusion: Vec<Vec<usize>>,
}

fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Accuracy, per-class precision/recall/F1 and the confusion matrix for a
/// pair of equal-length label sequences.
pub fn frame_metrics(pred: &LabelSequence, gt: &LabelSequence) -> Result<FrameReport> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            expected: gt.len(),
            got: pred.len(),
        });
    }
    if gt.is_empty() {
        return Err(Error::EmptySequence);
    }

    let mut confusion = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
    let mut correct = 0usize;
    for (&p, &g) in pred.labels.iter().zip(&gt.labels) {
        confusion[g.id() as usize][p.id() as usize] += 1;
        if p == g {
            correct += 1;
        }
    }

    let mut per_class = Vec::with_capacity(NUM_CLASSES);
    let (mut mp, mut mr, mut mf, mut present) = (0.0, 0.0, 0.0, 0usize);
    for class in SkillClass::ALL {
        let c = class.id() as usize;
        let tp = confusion[c][c];
        let gt_count: usize = confusion[c].iter().sum();
        let pred_count: usize = confusion.iter().map(|row| row[c]).sum();
        let precision = if pred_count > 0 { tp as f64 / pred_count as f64 } else { 0.0 };
        let recall = if gt_count > 0 { tp as f64 / gt_count as f64 } else { 0.0 };
        let f1 = f1_score(precision, recall);
        if gt_count > 0 || pred_count > 0 {
            mp += precision;
            mr += recall;
            mf += f1;
            present += 1;
        }
        per_class.push(ClassFrameMetrics {
            class,
            precision,
            recall,
            f1,
            support: gt_count,
        });
    }
    let denom = present.max(1) as f64;
    Ok(FrameReport {
        accuracy: correct as f64 / gt.len() as f64,
        per_class,
        macro_precision: mp / denom,
        macro_recall: mr / denom,
        macro_f1: mf / denom,
        confusion,
    })
}

fn class_segments(timelines: &[Timeline], class: SkillClass) -> Vec<Segment> {
    timelines
        .iter()
        .flat_map(|tl| tl.segments.iter().copied())
        .filter(|s| s.class == class)
        .collect()
}

/// One-to-one greedy matching by descending IoU; returns the matched IoUs
/// in pick order (non-increasing). Zero-overlap pairs never match.
///
/// Segments from different videos never overlap conceptually, so matching
/// is done per video; pooled precision/recall then count over all videos.
fn greedy_match(pred: &[Timeline], gt: &[Timeline], class: SkillClass) -> Vec<f64> {
    let mut by_id: std::collections::BTreeMap<&str, (Vec<Segment>, Vec<Segment>)> =
        std::collections::BTreeMap::new();
    for tl in pred {
        by_id.entry(tl.video_id.as_str()).or_default().0.extend(
            tl.segments.iter().copied().filter(|s| s.class == class),
        );
    }
    for tl in gt {
        by_id.entry(tl.video_id.as_str()).or_default().1.extend(
            tl.segments.iter().copied().filter(|s| s.class == class),
        );
    }

    let mut matched = Vec::new();
    for (ps, gs) in by_id.values() {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, p) in ps.iter().enumerate() {
            for (j, g) in gs.iter().enumerate() {
                let v = p.iou(g);
                if v > 0.0 {
                    pairs.push((v, i, j));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_p = vec![false; ps.len()];
        let mut used_g = vec![false; gs.len()];
        for (v, i, j) in pairs {
            if !used_p[i] && !used_g[j] {
                used_p[i] = true;
                used_g[j] = true;
                matched.push(v);
            }
        }
    }
    matched.sort_by(|a, b| b.partial_cmp(a).unwrap());
    matched
}

/// Segment-based F1 for one class at one IoU threshold, pooled over all
/// videos. `None` when the class appears in neither prediction nor ground
/// truth (undefined, excluded from mASF1).
pub fn sf1(pred: &[Timeline], gt: &[Timeline], class: SkillClass, t: f64) -> Option<f64> {
    let n_pred = class_segments(pred, class).len();
    let n_gt = class_segments(gt, class).len();
    if n_pred == 0 && n_gt == 0 {
        return None;
    }
    let matches = greedy_match(pred, gt, class)
        .iter()
        .filter(|&&v| v > t)
        .count();
    let precision = if n_pred > 0 { matches as f64 / n_pred as f64 } else { 0.0 };
    let recall = if n_gt > 0 { matches as f64 / n_gt as f64 } else { 0.0 };
    Some(f1_score(precision, recall))
}

/// SF1 averaged over the threshold grid.
pub fn asf1(pred: &[Timeline], gt: &[Timeline], class: SkillClass, grid: &[f64]) -> Option<f64> {
    let total: f64 = grid
        .iter()
        .map(|&t| sf1(pred, gt, class, t))
        .collect::<Option<Vec<f64>>>()?
        .iter()
        .sum();
    Some(total / grid.len() as f64)
}

/// ASF1 averaged over every class with at least one predicted or
/// ground-truth segment.
pub fn masf1(pred: &[Timeline], gt: &[Timeline], grid: &[f64]) -> f64 {
    let scores: Vec<f64> = SkillClass::ALL
        .iter()
        .filter_map(|&c| asf1(pred, gt, c, grid))
        .collect();
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSegScore {
    pub class: SkillClass,
    /// `None` when the class is absent from both prediction and ground truth.
    pub asf1: Option<f64>,
    /// SF1 per threshold; empty for absent classes.
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegReport {
    pub masf1: f64,
    pub per_class: Vec<ClassSegScore>,
    pub thresholds: Vec<f64>,
    /// Mean SF1 over present classes, per threshold.
    pub mean_curve: Vec<f64>,
}

/// Full segment-level report: per-class curves and ASF1, plus mASF1.
pub fn seg_report(pred: &[Timeline], gt: &[Timeline], grid: &[f64]) -> SegReport {
    let mut per_class = Vec::with_capacity(NUM_CLASSES);
    for class in SkillClass::ALL {
        let curve: Option<Vec<f64>> = grid.iter().map(|&t| sf1(pred, gt, class, t)).collect();
        match curve {
            Some(curve) => {
                let asf1 = curve.iter().sum::<f64>() / grid.len() as f64;
                per_class.push(ClassSegScore {
                    class,
                    asf1: Some(asf1),
                    curve,
                });
            }
            None => per_class.push(ClassSegScore {
                class,
                asf1: None,
                curve: Vec::new(),
            }),
        }
    }
    let present: Vec<&ClassSegScore> = per_class.iter().filter(|c| c.asf1.is_some()).collect();
    let masf1 = if present.is_empty() {
        0.0
    } else {
        present.iter().map(|c| c.asf1.unwrap()).sum::<f64>() / present.len() as f64
    };
    let mean_curve = (0..grid.len())
        .map(|i| {
            if present.is_empty() {
                0.0
            } else {
                present.iter().map(|c| c.curve[i]).sum::<f64>() / present.len() as f64
            }
        })
        .collect();
    SegReport {
        masf1,
        per_class,
        thresholds: grid.to_vec(),
        mean_curve,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EdgeBin {
    /// Smallest edge distance in the bin (inclusive).
    pub lo: usize,
    /// Largest edge distance in the bin (inclusive).
    pub hi: usize,
    pub correct: usize,
    pub total: usize,
}

impl EdgeBin {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Classification accuracy binned by each frame's distance to the nearest
/// edge of its ground-truth segment (`min(i - start, end - i)`).
pub fn edge_distance_accuracy(
    pred: &LabelSequence,
    gt: &Timeline,
    bin_width: usize,
) -> Result<Vec<EdgeBin>> {
    if bin_width < 1 {
        return Err(Error::InvalidConfig("bin width must be >= 1".into()));
    }
    if pred.len() != gt.n_frames {
        return Err(Error::DimensionMismatch {
            expected: gt.n_frames,
            got: pred.len(),
        });
    }
    gt.validate()?;

    let mut bins: Vec<EdgeBin> = Vec::new();
    for seg in &gt.segments {
        for i in seg.start..=seg.end {
            let distance = (i - seg.start).min(seg.end - i);
            let b = distance / bin_width;
            while bins.len() <= b {
                let lo = bins.len() * bin_width;
                bins.push(EdgeBin { lo, hi: lo + bin_width - 1, correct: 0, total: 0 });
            }
            bins[b].total += 1;
            if pred.labels[i] == seg.class {
                bins[b].correct += 1;
            }
        }
    }
    Ok(bins)
}

/// Pools per-video edge bins into one histogram.
pub fn merge_edge_bins(per_video: &[Vec<EdgeBin>]) -> Vec<EdgeBin> {
    let mut merged: Vec<EdgeBin> = Vec::new();
    for bins in per_video {
        for (i, bin) in bins.iter().enumerate() {
            if merged.len() <= i {
                merged.push(EdgeBin { lo: bin.lo, hi: bin.hi, correct: 0, total: 0 });
            }
            merged[i].correct += bin.correct;
            merged[i].total += bin.total;
        }
    }
    merged
}
