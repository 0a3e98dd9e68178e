//! Lighting-score filtering and seeded dataset splits.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{below, rng_from_seed};

pub const DEFAULT_THRESHOLD: f64 = 0.21;

/// Text prompts scored against every image. The first four are the ones
/// used for the published dataset; the last three are engine defaults.
pub const DEFAULT_PROMPTS: [&str; 7] = [
    "beautiful lighting",
    "professional lighting",
    "well lit face",
    "bright and clear lighting",
    "soft studio lighting",
    "evenly lit portrait",
    "clear natural light",
];

/// One line of the scores sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub image_id: String,
    pub prompt_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterScore {
    pub image_id: String,
    pub prompt_scores: Vec<f64>,
    pub mean_score: f64,
}

impl FilterScore {
    pub fn from_row(row: ScoreRow, prompt_count: usize) -> Result<Self> {
        if row.prompt_scores.len() != prompt_count {
            return Err(Error::Config(format!(
                "{}: expected {prompt_count} prompt scores, got {}",
                row.image_id,
                row.prompt_scores.len()
            )));
        }
        let mean_score = average_scores(&row.prompt_scores)?;
        Ok(Self {
            image_id: row.image_id,
            prompt_scores: row.prompt_scores,
            mean_score,
        })
    }
}

pub fn average_scores(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Strict comparison: a score equal to the threshold is rejected.
#[inline]
pub fn passes_threshold(mean_score: f64, threshold: f64) -> bool {
    mean_score > threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    /// Kept by the filter but beyond the requested split counts.
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub const PUBLISHED: SplitCounts = SplitCounts {
        train: 10_000,
        val: 1_000,
        test: 1_000,
    };

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub image_id: String,
    pub split: Split,
}

/// Shuffles the sorted, de-duplicated ids with a Fisher-Yates pass driven by
/// `seed`, then cuts train, val and test in that order. Ids beyond the
/// requested total are left out of the result.
pub fn split_dataset(
    kept_ids: &[String],
    counts: SplitCounts,
    seed: u64,
) -> Result<Vec<SplitAssignment>> {
    let mut ids: Vec<&String> = kept_ids.iter().collect();
    ids.sort();
    ids.dedup();
    if counts.total() > ids.len() {
        return Err(Error::InsufficientIds {
            requested: counts.total(),
            available: ids.len(),
        });
    }
    let mut rng = rng_from_seed(seed);
    for i in (1..ids.len()).rev() {
        let j = below(&mut rng, i as u64 + 1) as usize;
        ids.swap(i, j);
    }
    let labels = std::iter::repeat_n(Split::Train, counts.train)
        .chain(std::iter::repeat_n(Split::Val, counts.val))
        .chain(std::iter::repeat_n(Split::Test, counts.test));
    Ok(ids
        .into_iter()
        .zip(labels)
        .map(|(id, split)| SplitAssignment {
            image_id: id.clone(),
            split,
        })
        .collect())
}

/// Result of running the gate over a whole scores sidecar.
#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<FilterScore>,
    pub rejected: Vec<FilterScore>,
    /// Split of every kept id; surplus ids are `Unassigned`.
    pub splits: BTreeMap<String, Split>,
}

pub fn apply_filter(
    scores: Vec<FilterScore>,
    threshold: f64,
    counts: SplitCounts,
    seed: u64,
) -> Result<FilterOutcome> {
    let (kept, rejected): (Vec<_>, Vec<_>) = scores
        .into_iter()
        .partition(|s| passes_threshold(s.mean_score, threshold));
    let ids: Vec<String> = kept.iter().map(|s| s.image_id.clone()).collect();
    let mut splits: BTreeMap<String, Split> =
        ids.iter().map(|id| (id.clone(), Split::Unassigned)).collect();
    for a in split_dataset(&ids, counts, seed)? {
        splits.insert(a.image_id, a.split);
    }
    Ok(FilterOutcome {
        kept,
        rejected,
        splits,
    })
}

/// Parses a scores sidecar. Each line yields either a score or an error
/// tagged with the image id when one could be recovered.
pub fn read_scores(
    path: &Path,
    prompt_count: usize,
) -> Result<Vec<std::result::Result<FilterScore, (String, Error)>>> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut rows = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match serde_json::from_str::<ScoreRow>(&line) {
            Ok(row) => {
                let id = row.image_id.clone();
                FilterScore::from_row(row, prompt_count).map_err(|e| (id, e))
            }
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("image_id")?.as_str().map(str::to_owned))
                    .unwrap_or_else(|| format!("<line {}>", n + 1));
                Err((
                    id,
                    Error::MalformedRow {
                        line: n + 1,
                        detail: e.to_string(),
                    },
                ))
            }
        };
        rows.push(parsed);
    }
    Ok(rows)
}

pub fn write_splits(path: &Path, splits: &BTreeMap<String, Split>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (id, split) in splits {
        let row = SplitAssignment {
            image_id: id.clone(),
            split: *split,
        };
        serde_json::to_writer(&mut out, &row).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
