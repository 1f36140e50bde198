//! Temporal segmentation of calisthenics skills from per-frame body-pose
//! features.
//!
//! The pipeline classifies each video frame from 75 normalized OpenPose
//! joint features with a small MLP, then smooths the per-frame predictions
//! into a contiguous labeled timeline, either with a sliding-window mode
//! heuristic or by Viterbi decoding under a Markov label model. Segment
//! quality is scored with the SF1 / ASF1 / mASF1 stack over a grid of IoU
//! thresholds.

pub mod cli;
pub mod error;
pub mod files;
pub mod heuristic;
pub mod metrics;
pub mod mlp;
pub mod pose;
pub mod render;
pub mod synth;
pub mod timeline;
pub mod viterbi;

pub use error::{Error, Result};
pub use timeline::{LabelSequence, Segment, SkillClass, Timeline};
