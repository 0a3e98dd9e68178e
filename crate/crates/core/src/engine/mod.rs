//! Dataset assembly: configuration, per-image stage composition, parallel
//! batch runs and the triplet manifest.

mod batch;
mod config;
mod manifest;
mod pipeline;

pub use batch::{
    list_images, run_batch, run_filter, RunOptions, RunSummary, FAILURES_FILE, MANIFEST_FILE,
    PARTIAL_FILE, SPLITS_FILE,
};
pub use config::{Paths, PipelineConfig, ShadowConfig};
pub use manifest::{
    parse_record, read_manifest, read_partial, record_line, write_jsonl, write_manifest,
    DegradationParams, Stage, StageError, TripletRecord, SCHEMA_VERSION,
};
pub use pipeline::{
    degrade, degraded_rel_path, ground_truth_rel_path, process_image, validate_instruction,
    Degraded, Triplet, MAX_INSTRUCTION_CHARS,
};
