use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("unsupported image format in {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error("corrupt image data in {path}: {detail}")]
    CorruptImage { path: PathBuf, detail: String },
    #[error("cannot write {path}: {detail}")]
    Write { path: PathBuf, detail: String },
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("invalid dimensions {0}x{1}")]
    InvalidDimensions(usize, usize),
    #[error("sigma must be non-negative and finite, got {0}")]
    NegativeSigma(f64),
    #[error("empty score list")]
    EmptyScores,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("requested {requested} ids for the splits but only {available} are available")]
    InsufficientIds { requested: usize, available: usize },
    #[error("mask covers no pixels")]
    EmptyMask,
    #[error("all pattern weights are zero")]
    ZeroWeights,
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("instruction must be exactly one sentence")]
    MultiSentence,
    #[error("instruction is {0} characters, limit is {max}", max = crate::engine::MAX_INSTRUCTION_CHARS)]
    OverlongInstruction(usize),
    #[error("empty value list for metric {0}")]
    EmptyMetric(String),
    #[error("unknown image id {0:?}")]
    UnknownId(String),
    #[error("malformed row at line {line}: {detail}")]
    MalformedRow { line: usize, detail: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
