//! Manifest rows and their line-delimited JSON encoding.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtering::Split;
use crate::shadowgen::PatternKind;

/// Bumped whenever a field of [`TripletRecord`] changes meaning or name.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything sampled while degrading one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    /// Weight of the original foreground in the albedo blend.
    pub alpha: f64,
    pub light_direction: [f64; 3],
    pub ambient: f64,
    pub pattern_kind: PatternKind,
    /// True for generators that are engine additions.
    pub pattern_engine_addition: bool,
    pub opacity: f64,
    pub blur_sigma: f64,
    pub pattern_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub schema_version: u32,
    pub image_id: String,
    /// Degraded input, relative to the manifest directory.
    pub input_path: String,
    /// Ground truth, relative to the manifest directory.
    pub output_path: String,
    pub instruction: String,
    pub split: Split,
    pub clip_score: f64,
    pub seed: u64,
    pub params: DegradationParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Load,
    Filter,
    Mask,
    Albedo,
    Degrade,
    Instruction,
    Write,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub image_id: String,
    pub stage: Stage,
    pub message: String,
}

impl StageError {
    pub fn new(image_id: &str, stage: Stage, err: impl std::fmt::Display) -> Self {
        Self {
            image_id: image_id.to_owned(),
            stage,
            message: err.to_string(),
        }
    }
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} [{:?}]: {}", self.image_id, self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

pub fn record_line(record: &TripletRecord) -> String {
    serde_json::to_string(record).expect("records always serialize")
}

pub fn parse_record(line: &str) -> serde_json::Result<TripletRecord> {
    serde_json::from_str(line)
}

/// Writes rows sorted by `image_id`, one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut out = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        for row in rows {
            serde_json::to_writer(&mut out, row).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_manifest(path: &Path, records: &mut [TripletRecord]) -> Result<()> {
    records.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    write_jsonl(path, records)
}

pub fn read_manifest(path: &Path) -> Result<Vec<TripletRecord>> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut records = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(&line).map_err(|e| Error::MalformedRow {
            line: n + 1,
            detail: e.to_string(),
        })?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(Error::MalformedRow {
                line: n + 1,
                detail: format!("unsupported schema_version {}", record.schema_version),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Lenient reader for the in-progress log: a run killed mid-write can leave a
/// truncated last line, which is dropped.
pub fn read_partial(path: &Path) -> Result<Vec<TripletRecord>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    Ok(text
        .lines()
        .filter_map(|l| parse_record(l).ok())
        .filter(|r| r.schema_version == SCHEMA_VERSION)
        .collect())
}
