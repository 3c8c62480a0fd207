use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid {kind}: {value:?}")]
pub struct ParseEnumError {
    pub kind: &'static str,
    pub value: String,
}

impl ParseEnumError {
    pub fn new(kind: &'static str, value: &str) -> Self {
        ParseEnumError {
            kind,
            value: value.to_string(),
        }
    }
}

/// Errors from reading and writing study files and pipeline outputs.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        field: String,
        message: String,
    },
    #[error("{path}: schema version {found} is not supported (expected {expected})")]
    SchemaVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: {count} invariant violation(s); first: {first}")]
    Invalid {
        path: PathBuf,
        count: usize,
        first: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AssignError {
    #[error("{subjects} subject(s) cannot cover {required} annotators per sample")]
    TooFewSubjects { subjects: usize, required: usize },
    #[error("annotators_per_sample and sessions must be positive")]
    ZeroParameter,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("zero variance: all values equal {0}")]
    ZeroVariance(f64),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum QaError {
    #[error("no votes")]
    EmptyVotes,
    #[error("vote set for video {0} has no subtask with votes")]
    EmptyVoteSet(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series is constant")]
    Constant,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BenchError {
    #[error("only {covered} video(s) covered; need at least 2")]
    InsufficientCoverage { covered: usize },
    #[error("only {0} model(s) in common; need at least 2")]
    TooFewModels(usize),
    #[error("unknown model id {0:?}")]
    UnknownModel(String),
    #[error("empty model subset")]
    EmptySubset,
    #[error("video {0:?} has no model assignment")]
    UnmappedVideo(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PrepError {
    #[error("score bounds invalid: m={m} must be below M={max}")]
    InvalidBounds { m: f64, max: f64 },
    #[error("score {s} outside [{m}, {max}]")]
    OutOfRange { s: f64, m: f64, max: f64 },
    #[error("grid spec L={grid} P={patch} does not fit a {height}x{width} frame")]
    InfeasibleGrid {
        grid: usize,
        patch: usize,
        height: usize,
        width: usize,
    },
    #[error("frames differ in shape: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("no frames supplied")]
    NoFrames,
    #[error("factor {factor} does not divide {height}x{width}")]
    NotDivisible {
        factor: usize,
        height: usize,
        width: usize,
    },
    #[error("channel count {channels} is not divisible by {factor}^2")]
    BadChannels { channels: usize, factor: usize },
    #[error("{0}")]
    InfeasibleSplit(String),
    #[error("array data length {got} does not match shape {expected}")]
    DataLength { got: usize, expected: usize },
}
