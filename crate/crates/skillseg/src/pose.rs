//! Ingestion of per-frame OpenPose BODY_25B keypoint files into normalized
//! 75-dimensional feature vectors, ground-truth annotation loading, and
//! train/test splitting.
//!
//! Pose estimation itself is upstream; this module only consumes its output
//! files (one JSON record per frame, `people[0].pose_keypoints_2d` holding
//! 75 floats in pixel coordinates).

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files;
use crate::timeline::Timeline;

/// Joints in the BODY_25B model.
pub const NUM_JOINTS: usize = 25;

/// Features per frame: (x, y, confidence) per joint.
pub const FEATURE_DIM: usize = NUM_JOINTS * 3;

/// One body joint, coordinates normalized by the frame dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

/// The 25 joints detected in a single frame.
///
/// When no person was found, `detected` is false and all 75 values are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub joints: Vec<Joint>,
    pub detected: bool,
}

impl PoseFrame {
    pub fn undetected() -> Self {
        PoseFrame {
            joints: vec![Joint { x: 0.0, y: 0.0, confidence: 0.0 }; NUM_JOINTS],
            detected: false,
        }
    }

    /// Flattens into the fixed layout: index `3j` = x of joint `j`,
    /// `3j + 1` = y, `3j + 2` = confidence.
    pub fn feature_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(FEATURE_DIM);
        for j in &self.joints {
            v.push(j.x);
            v.push(j.y);
            v.push(j.confidence);
        }
        v
    }
}

/// Raw OpenPose output record for one frame. Unknown fields are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeypointRecord {
    #[serde(default)]
    pub people: Vec<KeypointPerson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeypointPerson {
    pub pose_keypoints_2d: Vec<f64>,
}

/// Per-video metadata accompanying the keypoint files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VideoMeta {
    pub width: f64,
    pub height: f64,
    pub fps: f64,
}

/// Normalized per-frame feature vectors for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    pub video_id: String,
    pub fps: f64,
    pub frames: Vec<Vec<f64>>,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        files::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let seq: FeatureSequence = files::read_json(path)?;
        for (i, frame) in seq.frames.iter().enumerate() {
            if frame.len() != FEATURE_DIM {
                return Err(Error::BadFrame {
                    frame: i,
                    reason: format!("expected {FEATURE_DIM} features, got {}", frame.len()),
                });
            }
        }
        Ok(seq)
    }
}

/// A validated ground-truth annotation for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(flatten)]
    pub timeline: Timeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub md5: Option<String>,
}

/// Deterministic train/test partition of video ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Normalizes one keypoint record: x is divided by `width`, y by `height`,
/// confidence passes through. An empty people list yields the all-zero
/// undetected frame.
pub fn parse_pose_frame(record: &KeypointRecord, width: f64, height: f64) -> Result<PoseFrame> {
    if !(width > 0.0) || !(height > 0.0) {
        return Err(Error::InvalidFrameDims { width, height });
    }
    let Some(person) = record.people.first() else {
        return Ok(PoseFrame::undetected());
    };
    let kp = &person.pose_keypoints_2d;
    if kp.len() != FEATURE_DIM {
        return Err(Error::MalformedKeypoints {
            expected: FEATURE_DIM,
            got: kp.len(),
        });
    }
    let joints = kp
        .chunks_exact(3)
        .map(|t| Joint {
            x: t[0] / width,
            y: t[1] / height,
            confidence: t[2],
        })
        .collect();
    Ok(PoseFrame { joints, detected: true })
}

/// Frame index parsed from the last run of ASCII digits in the file stem
/// (OpenPose names files like `vid_000000000042_keypoints.json`).
fn frame_index(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// Loads all per-frame keypoint records in `dir` (lexicographic filename
/// order, which must agree with the embedded frame indices) and normalizes
/// them into a [`FeatureSequence`].
pub fn load_video_features(
    dir: &Path,
    video_id: impl Into<String>,
    meta: &VideoMeta,
) -> Result<FeatureSequence> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()) == Some("json")
                && p.file_name().and_then(|n| n.to_str()) != Some("meta.json")
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no keypoint files"),
        ));
    }
    entries.sort();

    let mut prev_index: Option<usize> = None;
    let mut frames = Vec::with_capacity(entries.len());
    for (pos, path) in entries.iter().enumerate() {
        let index = frame_index(path).ok_or_else(|| Error::BadFrame {
            frame: pos,
            reason: format!("no frame index in filename {}", path.display()),
        })?;
        if let Some(prev) = prev_index {
            if index != prev + 1 {
                return Err(Error::MissingFrame {
                    missing: prev + 1,
                    after: prev,
                    dir: dir.to_path_buf(),
                });
            }
        }
        prev_index = Some(index);

        let record: KeypointRecord = files::read_json(path).map_err(|e| Error::BadFrame {
            frame: index,
            reason: e.to_string(),
        })?;
        let pose = parse_pose_frame(&record, meta.width, meta.height).map_err(|e| Error::BadFrame {
            frame: index,
            reason: e.to_string(),
        })?;
        frames.push(pose.feature_vector());
    }

    Ok(FeatureSequence {
        video_id: video_id.into(),
        fps: meta.fps,
        frames,
    })
}

/// Loads and validates a ground-truth annotation in the timeline file format.
pub fn load_annotation(path: &Path) -> Result<GroundTruth> {
    let gt: GroundTruth = files::read_json(path)?;
    gt.timeline.validate()?;
    Ok(gt)
}

/// Deterministically partitions `ids` with `|train| = round(ratio * total)`.
///
/// The ids are sorted before shuffling, so the split is a pure function of
/// the id set, the ratio, and the seed.
pub fn split_dataset(ids: &[String], ratio: f64, seed: u64) -> Result<DatasetSplit> {
    if ids.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let n_train = (ratio * sorted.len() as f64).round() as usize;
    let test = sorted.split_off(n_train.min(sorted.len()));
    Ok(DatasetSplit {
        train: sorted,
        test,
        seed,
    })
}
