//! Synthetic ground-truth timelines and simulated classifier outputs for
//! desk-scale, oracle-checked testing of the segmenters and metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::ProbSequence;
use crate::timeline::{
    segments_to_labels, LabelSequence, Segment, SkillClass, Timeline, DEFAULT_FPS, NUM_CLASSES,
};

/// Frames within this distance of a segment boundary count as "edge" frames
/// for the edge-biased noise mode.
pub const EDGE_NOISE_RADIUS: usize = 5;

/// Noise multiplier applied to edge frames in edge-biased mode.
pub const EDGE_NOISE_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_videos: usize,
    /// Inclusive range of total frames per video.
    pub frames: (usize, usize),
    /// Inclusive range of segment lengths in frames.
    pub segment_len: (usize, usize),
    /// Number of distinct skill classes to draw from (1..=9); `NONE`
    /// segments are interleaved regardless.
    pub class_count: usize,
    /// Probability that a frame's probability row peaks on a wrong class.
    pub noise: f64,
    /// Probability mass placed on the true class of each row.
    pub alpha: f64,
    /// Triple the noise rate within [`EDGE_NOISE_RADIUS`] frames of a
    /// segment boundary (mimics real classifier behavior at edges).
    pub edge_bias: bool,
    pub fps: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_videos: 10,
            frames: (300, 600),
            // skills in the corpus average ~5.83 s, i.e. ~140 frames at 24 fps
            segment_len: (100, 180),
            class_count: 9,
            noise: 0.05,
            alpha: 0.9,
            edge_bias: false,
            fps: DEFAULT_FPS,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (min_len, max_len) = self.segment_len;
        if min_len < 1 || max_len < min_len {
            return Err(Error::InvalidConfig(format!(
                "segment length range ({min_len}, {max_len}) is invalid"
            )));
        }
        let (min_n, max_n) = self.frames;
        if min_n < min_len || max_n < min_n {
            return Err(Error::InvalidConfig(format!(
                "frame range ({min_n}, {max_n}) cannot fit segments of at least {min_len} frames"
            )));
        }
        if !(1..=9).contains(&self.class_count) {
            return Err(Error::InvalidConfig(format!(
                "class count {} outside [1, 9]",
                self.class_count
            )));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidConfig(format!("noise {} outside [0, 1)", self.noise)));
        }
        let k = NUM_CLASSES as f64;
        if !(self.alpha > 1.0 / k && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} outside (1/{NUM_CLASSES}, 1]",
                self.alpha
            )));
        }
        if self.n_videos < 1 {
            return Err(Error::InvalidConfig("n_videos must be >= 1".into()));
        }
        Ok(())
    }
}

/// True if `n` frames can be tiled exactly by segments in `[min, max]`.
fn tileable(n: usize, min: usize, max: usize) -> bool {
    if n == 0 {
        return true;
    }
    (1..=n / min).any(|k| k * min <= n && n <= k * max)
}

/// Generates a random contiguous timeline of alternating `NONE` and skill
/// segments with every segment length inside the configured range.
pub fn gen_timeline<R: Rng>(cfg: &SynthConfig, rng: &mut R, video_id: &str) -> Result<Timeline> {
    cfg.validate()?;
    let (min_len, max_len) = cfg.segment_len;

    // draw a total length, stepping down to the nearest tileable value
    let target = rng.gen_range(cfg.frames.0..=cfg.frames.1);
    let n = (min_len..=target)
        .rev()
        .find(|&n| tileable(n, min_len, max_len))
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "no frame count <= {target} is tileable by segments in [{min_len}, {max_len}]"
            ))
        })?;

    let mut segments: Vec<Segment> = Vec::new();
    let mut pos = 0usize;
    let mut background_next = rng.gen_bool(0.5);
    while pos < n {
        let remaining = n - pos;
        let hi = max_len.min(remaining);
        // keep the remainder tileable (or zero)
        let candidates: Vec<usize> = (min_len..=hi)
            .filter(|&len| remaining == len || tileable(remaining - len, min_len, max_len))
            .collect();
        debug_assert!(!candidates.is_empty(), "tileability invariant broken");
        let len = candidates[rng.gen_range(0..candidates.len())];
        let class = if background_next {
            SkillClass::None
        } else {
            SkillClass::from_id(rng.gen_range(0..cfg.class_count) as u8).expect("skill id")
        };
        background_next = !background_next;
        segments.push(Segment {
            class,
            start: pos,
            end: pos + len - 1,
        });
        pos += len;
    }
    Timeline::new(video_id, cfg.fps, n, segments)
}

fn edge_distance(tl: &Timeline, frame: usize) -> usize {
    for seg in &tl.segments {
        if frame >= seg.start && frame <= seg.end {
            return (frame - seg.start).min(seg.end - frame);
        }
    }
    usize::MAX
}

/// Simulates classifier output for a ground-truth timeline: each row puts
/// `alpha` on the true class and spreads the rest uniformly; with
/// probability `noise` the peak is swapped onto a uniformly random wrong
/// class.
pub fn gen_probs<R: Rng>(gt: &Timeline, cfg: &SynthConfig, rng: &mut R) -> Result<ProbSequence> {
    cfg.validate()?;
    let labels = segments_to_labels(gt)?;
    let off_mass = (1.0 - cfg.alpha) / (NUM_CLASSES as f64 - 1.0);
    let mut rows = Vec::with_capacity(labels.len());
    for (i, &label) in labels.labels.iter().enumerate() {
        let mut row = vec![off_mass; NUM_CLASSES];
        row[label.id() as usize] = cfg.alpha;
        let mut p = cfg.noise;
        if cfg.edge_bias && edge_distance(gt, i) < EDGE_NOISE_RADIUS {
            p = (p * EDGE_NOISE_FACTOR).min(0.99);
        }
        if rng.gen_bool(p) {
            let mut wrong = rng.gen_range(0..NUM_CLASSES - 1);
            if wrong >= label.id() as usize {
                wrong += 1;
            }
            row.swap(label.id() as usize, wrong);
        }
        rows.push(row);
    }
    Ok(ProbSequence {
        video_id: gt.video_id.clone(),
        fps: gt.fps,
        probs: rows,
    })
}

/// Replaces each label independently with probability `p` by a uniformly
/// random *different* class.
pub fn corrupt_labels<R: Rng>(labels: &LabelSequence, p: f64, rng: &mut R) -> Result<LabelSequence> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("noise {p} outside [0, 1)")));
    }
    let corrupted = labels
        .labels
        .iter()
        .map(|&c| {
            if rng.gen_bool(p) {
                let mut wrong = rng.gen_range(0..NUM_CLASSES - 1) as u8;
                if wrong >= c.id() {
                    wrong += 1;
                }
                SkillClass::from_id(wrong).expect("id < 10")
            } else {
                c
            }
        })
        .collect();
    LabelSequence::new(corrupted, labels.fps)
}

/// One ground truth plus its simulated classifier output.
#[derive(Debug, Clone)]
pub struct SynthVideo {
    pub gt: Timeline,
    pub probs: ProbSequence,
}

/// Generates the whole bundle deterministically from `cfg.seed`.
pub fn gen_bundle(cfg: &SynthConfig) -> Result<Vec<SynthVideo>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut videos = Vec::with_capacity(cfg.n_videos);
    for i in 0..cfg.n_videos {
        let gt = gen_timeline(cfg, &mut rng, &format!("synth_{i:04}"))?;
        let probs = gen_probs(&gt, cfg, &mut rng)?;
        videos.push(SynthVideo { gt, probs });
    }
    Ok(videos)
}
