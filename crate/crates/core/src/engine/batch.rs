//! Whole-dataset runs: filter, split, parallel per-image processing,
//! crash-safe manifest assembly and resume.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::manifest::{
    read_manifest, read_partial, record_line, write_jsonl, write_manifest, Stage, StageError,
    TripletRecord,
};
use super::pipeline::{degraded_rel_path, ground_truth_rel_path, process_image};
use crate::error::{Error, Result};
use crate::filtering::{apply_filter, read_scores, write_splits, FilterOutcome, FilterScore, SplitCounts};
use crate::image::{encode_png, load_depth, load_image, load_mask};
use crate::rng::derive_seed;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const PARTIAL_FILE: &str = "manifest.partial.jsonl";
pub const SPLITS_FILE: &str = "splits.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";
const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    pub resume: bool,
    /// Stop after this many newly processed images (manifest is not finalized).
    pub limit: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            resume: false,
            limit: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub total_scored: usize,
    /// Includes records carried over from an earlier run when resuming.
    pub processed: usize,
    pub resumed: usize,
    pub skipped_by_filter: usize,
    pub failed: Vec<StageError>,
    /// False when a `limit` stopped the run before every image was done.
    pub complete: bool,
}

#[derive(Debug, Deserialize)]
struct InstructionRow {
    image_id: String,
    instruction: String,
}

/// Maps image ids (file stems) to their source paths.
pub fn list_images(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(dir.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            // Deterministic pick when both a .png and a .jpg exist.
            out.entry(stem.to_owned())
                .and_modify(|p: &mut PathBuf| {
                    if path < *p {
                        *p = path.clone();
                    }
                })
                .or_insert(path);
        }
    }
    Ok(out)
}

fn read_instructions(path: &Path) -> Result<HashMap<String, String>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingFile(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = HashMap::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: InstructionRow = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            line: n + 1,
            detail: e.to_string(),
        })?;
        out.insert(row.image_id, row.instruction);
    }
    Ok(out)
}

/// Fills the split counts greedily (train, then val, then test) when fewer
/// ids were kept than requested.
fn fit_counts(counts: SplitCounts, available: usize) -> SplitCounts {
    let train = counts.train.min(available);
    let val = counts.val.min(available - train);
    let test = counts.test.min(available - train - val);
    SplitCounts { train, val, test }
}

/// Scores ingestion, threshold gate and splits. Malformed score rows come
/// back as filter-stage errors.
pub fn run_filter(cfg: &PipelineConfig) -> Result<(FilterOutcome, Vec<StageError>, usize)> {
    let rows = read_scores(&cfg.paths.scores, cfg.prompts.len())?;
    let total = rows.len();
    let mut scores: Vec<FilterScore> = Vec::new();
    let mut errors = Vec::new();
    for row in rows {
        match row {
            Ok(s) => scores.push(s),
            Err((id, e)) => errors.push(StageError::new(&id, Stage::Filter, e)),
        }
    }
    // A duplicated id keeps its first row; later ones are reported.
    let mut seen = std::collections::HashSet::new();
    scores.retain(|s| {
        let fresh = seen.insert(s.image_id.clone());
        if !fresh {
            errors.push(StageError::new(&s.image_id, Stage::Filter, "duplicate score row"));
        }
        fresh
    });
    let kept = scores
        .iter()
        .filter(|s| crate::filtering::passes_threshold(s.mean_score, cfg.threshold))
        .count();
    let counts = fit_counts(cfg.splits, kept);
    if counts != cfg.splits {
        eprintln!(
            "warning: {kept} images kept, fewer than the requested {} for splits; using {}/{}/{}",
            cfg.splits.total(),
            counts.train,
            counts.val,
            counts.test
        );
    }
    let outcome = apply_filter(scores, cfg.threshold, counts, cfg.global_seed)?;
    errors.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok((outcome, errors, total))
}

/// Writes `path` through a temporary file and a rename so readers never see
/// a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// Clears half-written files left by a killed run.
fn remove_temp_files(dir: &Path) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "tmp") {
            std::fs::remove_file(&path)?;
        }
    }
    Ok(())
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Write {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

struct Job<'a> {
    id: &'a str,
    score: f64,
}

pub fn run_batch(cfg: &PipelineConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let images = list_images(&cfg.paths.images)?;
    let out_dir = &cfg.paths.output;
    ensure_dir(out_dir)?;
    for sub in ["degraded", "ground_truth"] {
        ensure_dir(&out_dir.join(sub))?;
        remove_temp_files(&out_dir.join(sub))?;
    }
    for name in [MANIFEST_FILE, SPLITS_FILE, FAILURES_FILE] {
        let tmp = out_dir.join(name).with_extension("jsonl.tmp");
        if tmp.exists() {
            std::fs::remove_file(tmp)?;
        }
    }

    let (outcome, mut failed, total_scored) = run_filter(cfg)?;
    write_splits(&out_dir.join(SPLITS_FILE), &outcome.splits)?;

    let manifest_path = out_dir.join(MANIFEST_FILE);
    let partial_path = out_dir.join(PARTIAL_FILE);
    let mut done: BTreeMap<String, TripletRecord> = BTreeMap::new();
    if opts.resume {
        let mut previous = read_partial(&partial_path)?;
        if manifest_path.exists() {
            previous.extend(read_manifest(&manifest_path)?);
        }
        for r in previous {
            let complete = out_dir.join(&r.input_path).is_file() && out_dir.join(&r.output_path).is_file();
            if complete && outcome.splits.contains_key(&r.image_id) {
                done.insert(r.image_id.clone(), r);
            }
        }
    }
    // Rewrite the log with just the surviving records, dropping any torn line.
    {
        let mut log = std::io::BufWriter::new(std::fs::File::create(&partial_path)?);
        for r in done.values() {
            writeln!(log, "{}", record_line(r))?;
        }
        log.flush()?;
    }
    let resumed = done.len();

    let instructions = if outcome.kept.is_empty() {
        HashMap::new()
    } else {
        read_instructions(&cfg.paths.instructions)?
    };

    let mut jobs: Vec<Job> = outcome
        .kept
        .iter()
        .filter(|s| !done.contains_key(&s.image_id))
        .map(|s| Job { id: &s.image_id, score: s.mean_score })
        .collect();
    jobs.sort_by(|a, b| a.id.cmp(b.id));
    let limited = opts.limit.is_some_and(|n| n < jobs.len());
    if let Some(n) = opts.limit {
        jobs.truncate(n);
    }

    let sink = Mutex::new(
        std::fs::OpenOptions::new()
            .append(true)
            .open(&partial_path)?,
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let results: Vec<std::result::Result<TripletRecord, StageError>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let record = process_one(cfg, &images, &instructions, &outcome, job)?;
                let mut log = sink.lock().unwrap_or_else(|p| p.into_inner());
                writeln!(log, "{}", record_line(&record))
                    .and_then(|_| log.flush())
                    .map_err(|e| StageError::new(job.id, Stage::Write, e))?;
                Ok(record)
            })
            .collect()
    });

    for r in results {
        match r {
            Ok(record) => {
                done.insert(record.image_id.clone(), record);
            }
            Err(e) => failed.push(e),
        }
    }
    failed.sort_by(|a, b| (&a.image_id, a.stage).cmp(&(&b.image_id, b.stage)));

    let summary = RunSummary {
        total_scored,
        processed: done.len(),
        resumed,
        skipped_by_filter: outcome.rejected.len(),
        failed,
        complete: !limited,
    };
    if !limited {
        let mut records: Vec<TripletRecord> = done.into_values().collect();
        write_manifest(&manifest_path, &mut records)?;
        write_jsonl(&out_dir.join(FAILURES_FILE), &summary.failed)?;
        std::fs::remove_file(&partial_path)?;
    }
    Ok(summary)
}

fn process_one(
    cfg: &PipelineConfig,
    images: &BTreeMap<String, PathBuf>,
    instructions: &HashMap<String, String>,
    outcome: &FilterOutcome,
    job: &Job,
) -> std::result::Result<TripletRecord, StageError> {
    let id = job.id;
    let source = images
        .get(id)
        .ok_or_else(|| StageError::new(id, Stage::Load, Error::MissingFile(cfg.paths.images.join(id))))?;
    let gt = load_image(source).map_err(|e| StageError::new(id, Stage::Load, e))?;
    let mask = load_mask(cfg.paths.masks.join(format!("{id}.png")))
        .map_err(|e| StageError::new(id, Stage::Mask, e))?;
    let depth = load_depth(cfg.paths.depth.join(format!("{id}.png")))
        .map_err(|e| StageError::new(id, Stage::Degrade, e))?;
    let instruction = instructions
        .get(id)
        .ok_or_else(|| StageError::new(id, Stage::Instruction, "no instruction in sidecar"))?;
    let split = outcome.splits[id];
    let seed = derive_seed(cfg.global_seed, id);
    let triplet = process_image(id, &gt, &mask, &depth, instruction, job.score, split, seed, cfg)?;

    let write = |rel: String, img| -> std::result::Result<(), StageError> {
        let bytes = encode_png(img).map_err(|e| StageError::new(id, Stage::Write, e))?;
        write_atomic(&cfg.paths.output.join(rel), &bytes).map_err(|e| StageError::new(id, Stage::Write, e))
    };
    write(ground_truth_rel_path(id), &triplet.ground_truth)?;
    write(degraded_rel_path(id), &triplet.degraded)?;
    Ok(triplet.record)
}
