use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,

    #[error("gap or overlap at frame {0}")]
    Discontiguous(usize),

    #[error("adjacent segments share class {0} at frame {1}")]
    NotMaximal(String, usize),

    #[error("invalid segment: start {start} > end {end}")]
    InvalidSegment { start: usize, end: usize },

    #[error("segment [{start}, {end}] outside [0, {max}]")]
    SegmentOutOfBounds { start: usize, end: usize, max: usize },

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("class id {0} out of range [0, 9]")]
    InvalidClassId(u8),

    #[error("malformed keypoints: expected {expected} values, got {got}")]
    MalformedKeypoints { expected: usize, got: usize },

    #[error("invalid frame dimensions {width}x{height}")]
    InvalidFrameDims { width: f64, height: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sequence too short: need at least {need} frames, got {got}")]
    SequenceTooShort { need: usize, got: usize },

    #[error("epsilon {eps} outside (0, {max}]")]
    InvalidEpsilon { eps: f64, max: f64 },

    #[error("instance too large for brute force: {k}^{n} exceeds {limit}")]
    InstanceTooLarge { k: usize, n: usize, limit: u64 },

    #[error("malformed probability row {row}: {reason}")]
    MalformedProbRow { row: usize, reason: String },

    #[error("unsupported activation `{0}`")]
    UnsupportedActivation(String),

    #[error("unsupported model format version {0}")]
    UnsupportedFormatVersion(u32),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("frame {frame}: {reason}")]
    BadFrame { frame: usize, reason: String },

    #[error("missing frame {missing} (gap after frame {after}) in {dir}")]
    MissingFrame {
        missing: usize,
        after: usize,
        dir: PathBuf,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
