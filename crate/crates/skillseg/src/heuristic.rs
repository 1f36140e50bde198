//! Heuristic temporal segmentation in three passes over the raw per-frame
//! labels: a sliding-window mode extractor (SWME), a record-level noise
//! filter (FNR), and a timeline reconstructor (TR) that merges and expands
//! the surviving records into a contiguous timeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeline::{LabelSequence, Segment, SkillClass, Timeline, NUM_CLASSES};

/// Tuning constants for the heuristic. Defaults are the published values:
/// `m = 32`, `up = 0.14/n`, `dw = -0.11/n`, `stride = 3`, five-record
/// filter window (radius 2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub m: usize,
    pub up_num: f64,
    pub dw_num: f64,
    pub stride: usize,
    pub fnr_radius: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            m: 32,
            up_num: 0.14,
            dw_num: -0.11,
            stride: 3,
            fnr_radius: 2,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be >= 1".into()));
        }
        if self.stride < 1 {
            return Err(Error::InvalidConfig("stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// One sliding-window observation: the window's mode class and the absolute
/// frame indices of its first and last occurrence inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalRecord {
    pub mode_class: SkillClass,
    pub idx_start: usize,
    pub idx_end: usize,
}

/// Base window size `w_b = floor((1 - s) * m)`, clamped to at least 2, with
/// `s = 0.5 + sum(up * [F_i = F_i+1] + dw * [F_i != F_i+1])` over adjacent
/// frame pairs, `up = up_num/n`, `dw = dw_num/n`.
///
/// Depends only on the equality pattern of adjacent labels, so it is
/// invariant under relabeling. With the default constants the result lies
/// in `[11, 19]` for any sequence of at least 32 frames.
pub fn base_window(labels: &LabelSequence, cfg: &HeuristicConfig) -> Result<usize> {
    cfg.validate()?;
    let n = labels.len();
    if n < 2 {
        return Err(Error::SequenceTooShort { need: 2, got: n });
    }
    let up = cfg.up_num / n as f64;
    let dw = cfg.dw_num / n as f64;
    let mut s = 0.5;
    for pair in labels.labels.windows(2) {
        s += if pair[0] == pair[1] { up } else { dw };
    }
    let wb = ((1.0 - s) * cfg.m as f64).floor() as i64;
    Ok(wb.max(2) as usize)
}

/// Classes sharing the window's maximum count, in increasing id order.
fn window_modes(window: &[SkillClass]) -> Vec<SkillClass> {
    let mut counts = [0usize; NUM_CLASSES];
    for &c in window {
        counts[c.id() as usize] += 1;
    }
    let max = *counts.iter().max().expect("non-empty");
    counts
        .iter()
        .enumerate()
        .filter(|&(_, &n)| n == max && max > 0)
        .map(|(id, _)| SkillClass::from_id(id as u8).expect("id < 10"))
        .collect()
}

/// Sliding Window Mode Extractor.
///
/// Scans the sequence with a window of size `w_s` (initially the base
/// window) ending at cursor `c`, starting at `c = w_b - 1`. A window with a
/// unique mode emits one [`IntervalRecord`], resets `w_s`, and advances the
/// cursor by `stride` frames (consecutive windows overlap by `w_s - stride`).
/// A tied window grows one frame to the right (start fixed) and retries;
/// a tie that is still unresolved at the last frame breaks toward the
/// lowest class id. The final window is clamped to end at the last frame.
pub fn swme(labels: &LabelSequence, cfg: &HeuristicConfig) -> Result<Vec<IntervalRecord>> {
    let wb = base_window(labels, cfg)?;
    let n = labels.len();
    if n < wb {
        return Err(Error::SequenceTooShort { need: wb, got: n });
    }
    let seq = &labels.labels;
    let mut records = Vec::new();
    let mut c = wb - 1;
    let mut ws = wb;
    loop {
        let start = c + 1 - ws;
        let window = &seq[start..=c];
        let modes = window_modes(window);
        if modes.len() == 1 || c == n - 1 {
            let mode = modes[0];
            let first = start + window.iter().position(|&x| x == mode).expect("mode present");
            let last = start + window.iter().rposition(|&x| x == mode).expect("mode present");
            records.push(IntervalRecord {
                mode_class: mode,
                idx_start: first,
                idx_end: last,
            });
            if c == n - 1 {
                break;
            }
            ws = wb;
            c += cfg.stride;
            if c > n - 1 {
                c = n - 1;
            }
        } else {
            ws += 1;
            c += 1;
        }
    }
    Ok(records)
}

/// Filtering and Noise Removal.
///
/// Replaces each record's class with the mode of the classes of records
/// `j - r ..= j + r` (indices clamped to the record list, so edge windows
/// repeat their boundary neighbors). A tied vote keeps the record's
/// original class. Interval indices are left untouched.
pub fn fnr(records: &[IntervalRecord], cfg: &HeuristicConfig) -> Vec<IntervalRecord> {
    let w = records.len();
    let r = cfg.fnr_radius as isize;
    records
        .iter()
        .enumerate()
        .map(|(j, rec)| {
            let mut counts = [0usize; NUM_CLASSES];
            for d in -r..=r {
                let idx = (j as isize + d).clamp(0, w as isize - 1) as usize;
                counts[records[idx].mode_class.id() as usize] += 1;
            }
            let max = *counts.iter().max().expect("non-empty");
            let modes: Vec<usize> = counts
                .iter()
                .enumerate()
                .filter(|&(_, &n)| n == max)
                .map(|(id, _)| id)
                .collect();
            let class = if modes.len() == 1 {
                SkillClass::from_id(modes[0] as u8).expect("id < 10")
            } else {
                rec.mode_class
            };
            IntervalRecord {
                mode_class: class,
                idx_start: rec.idx_start,
                idx_end: rec.idx_end,
            }
        })
        .collect()
}

/// Timeline Reconstructor.
///
/// Merges consecutive records of equal class into spans (start of the
/// first, end of the last), then expands the spans into a contiguous
/// timeline: the first segment starts at frame 0, the last ends at
/// `n_frames - 1`, and each interior boundary is cut at the midpoint
/// between one span's end and the next span's start, the left segment
/// taking the extra frame when the gap is odd.
pub fn tr(records: &[IntervalRecord], n_frames: usize, fps: f64) -> Result<Timeline> {
    if records.is_empty() || n_frames == 0 {
        return Err(Error::EmptySequence);
    }
    let mut spans: Vec<IntervalRecord> = Vec::new();
    for rec in records {
        match spans.last_mut() {
            Some(last) if last.mode_class == rec.mode_class => last.idx_end = rec.idx_end,
            _ => spans.push(*rec),
        }
    }

    let t = spans.len();
    let mut cuts = Vec::with_capacity(t + 1);
    cuts.push(0usize);
    for j in 0..t - 1 {
        let raw = (spans[j].idx_end + spans[j + 1].idx_start) / 2 + 1;
        // keep cuts strictly increasing and leave room for the spans after
        let lo = cuts[j] + 1;
        let hi = n_frames - (t - j - 1);
        cuts.push(raw.clamp(lo, hi));
    }
    cuts.push(n_frames);

    let mut segments: Vec<Segment> = Vec::new();
    for (j, span) in spans.iter().enumerate() {
        let (start, end) = (cuts[j], cuts[j + 1] - 1);
        if end < start {
            continue;
        }
        match segments.last_mut() {
            Some(last) if last.class == span.mode_class => last.end = end,
            _ => segments.push(Segment {
                class: span.mode_class,
                start,
                end,
            }),
        }
    }
    Timeline::new("", fps, n_frames, segments)
}

/// The full heuristic: `tr(fnr(swme(labels)))`.
pub fn heuristic_segment(labels: &LabelSequence, cfg: &HeuristicConfig) -> Result<Timeline> {
    let records = swme(labels, cfg)?;
    let filtered = fnr(&records, cfg);
    tr(&filtered, labels.len(), labels.fps)
}
