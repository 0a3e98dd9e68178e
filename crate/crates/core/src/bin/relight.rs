use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use relight_core::engine::{
    degrade, read_manifest, run_batch, run_filter, write_jsonl, PipelineConfig, RunOptions,
    StageError, FAILURES_FILE, SPLITS_FILE,
};
use relight_core::filtering::{write_splits, Split};
use relight_core::image::{load_depth, load_image, load_mask, save_gray, save_image};
use relight_core::metrics::{evaluate, render_table, Direction, ExternalMetric};
use relight_core::rng::{below, derive_seed, rng_from_seed};
use relight_core::shadowgen::{generate_pattern, PatternKind};
use relight_core::ImageRgb;

#[derive(Parser)]
#[command(name = "relight", version, about = "Relighting training-triplet engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average lighting scores, apply the threshold and assign splits.
    Filter(FilterArgs),
    /// Build the full triplet dataset described by a config file.
    Run(RunArgs),
    /// Degrade a single image and print the sampled parameters as JSON.
    Degrade(DegradeArgs),
    /// Score predictions against a manifest's ground truth.
    Metrics(MetricsArgs),
    /// Render a contact sheet of triplets, or dump raw shadow patterns.
    #[command(subcommand)]
    Preview(PreviewCommand),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML (or .json) pipeline config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `global_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::load(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.global_seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory; defaults to the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Keep finished images from an interrupted run.
    #[arg(long)]
    resume: bool,
    /// Stop after this many new images without finalizing the manifest.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// 16-bit depth PNG.
    #[arg(long)]
    depth: PathBuf,
    /// Pipeline config; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-image seed; derived from the global seed and `--id` when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Image id; defaults to the image file stem.
    #[arg(long)]
    id: Option<String>,
    /// Degraded output PNG.
    #[arg(long)]
    out: PathBuf,
    /// Also write the resized ground truth here.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory of `<image_id>.png` predictions.
    #[arg(long)]
    predictions: PathBuf,
    /// Restrict to one split (train, val, test).
    #[arg(long)]
    split: Option<Split>,
    /// LPIPS sidecar (lower is better).
    #[arg(long)]
    lpips: Option<PathBuf>,
    /// CLIP score sidecar (higher is better).
    #[arg(long)]
    clip: Option<PathBuf>,
    /// Identity similarity sidecar (higher is better).
    #[arg(long)]
    identity: Option<PathBuf>,
    /// Column header for the table.
    #[arg(long, default_value = "Ours")]
    column: String,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum PreviewCommand {
    /// Grid of sampled triplets: degraded and ground truth side by side.
    Triplets {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 8)]
        count: usize,
        /// Tile edge in pixels.
        #[arg(long, default_value_t = 256)]
        tile: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// One grayscale PNG per shadow pattern kind.
    Patterns {
        #[arg(long, default_value_t = 512)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Filter(args) => filter(args),
        Command::Run(args) => run(args),
        Command::Degrade(args) => degrade_one(args).map(|_| true),
        Command::Metrics(args) => metrics(args).map(|_| true),
        Command::Preview(cmd) => preview(cmd).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn report_failures(failed: &[StageError]) {
    for f in failed {
        eprintln!("failed: {f}");
    }
}

#[derive(Serialize)]
struct FilterResult<'a> {
    image_id: &'a str,
    mean_score: f64,
    kept: bool,
    split: Option<Split>,
}

fn filter(args: FilterArgs) -> anyhow::Result<bool> {
    let cfg = args.config.load()?;
    let out = args.out.unwrap_or_else(|| cfg.paths.output.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let (outcome, errors, total) = run_filter(&cfg)?;
    write_splits(&out.join(SPLITS_FILE), &outcome.splits)?;

    let mut rows: Vec<FilterResult> = outcome
        .kept
        .iter()
        .map(|s| FilterResult {
            image_id: &s.image_id,
            mean_score: s.mean_score,
            kept: true,
            split: outcome.splits.get(&s.image_id).copied(),
        })
        .chain(outcome.rejected.iter().map(|s| FilterResult {
            image_id: &s.image_id,
            mean_score: s.mean_score,
            kept: false,
            split: None,
        }))
        .collect();
    rows.sort_by(|a, b| a.image_id.cmp(b.image_id));
    write_jsonl(&out.join("filter.jsonl"), &rows)?;
    write_jsonl(&out.join(FAILURES_FILE), &errors)?;

    let count = |s: Split| outcome.splits.values().filter(|&&v| v == s).count();
    println!(
        "scored {total}, kept {}, rejected {}, failed {}; train {} val {} test {} unassigned {}",
        outcome.kept.len(),
        outcome.rejected.len(),
        errors.len(),
        count(Split::Train),
        count(Split::Val),
        count(Split::Test),
        count(Split::Unassigned),
    );
    report_failures(&errors);
    Ok(errors.is_empty())
}

fn run(args: RunArgs) -> anyhow::Result<bool> {
    let cfg = args.config.load()?;
    let opts = RunOptions {
        workers: args.workers,
        resume: args.resume,
        limit: args.limit,
    };
    let summary = run_batch(&cfg, &opts)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    report_failures(&summary.failed);
    Ok(summary.failed.is_empty())
}

#[derive(Serialize)]
struct DegradeOutput<'a> {
    image_id: &'a str,
    seed: u64,
    params: &'a relight_core::engine::DegradationParams,
}

fn degrade_one(args: DegradeArgs) -> anyhow::Result<()> {
    let cfg = match &args.config {
        Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    let id = match args.id {
        Some(id) => id,
        None => file_stem(&args.image)?,
    };
    let seed = args.seed.unwrap_or_else(|| derive_seed(cfg.global_seed, &id));
    let gt = load_image(&args.image)?;
    let mask = load_mask(&args.mask)?;
    let depth = load_depth(&args.depth)?;
    let out = degrade(&id, &gt, &mask, &depth, seed, &cfg)?;
    save_image(&out.degraded, &args.out)?;
    if let Some(path) = &args.ground_truth {
        save_image(&out.ground_truth, path)?;
    }
    let report = DegradeOutput { image_id: &id, seed, params: &out.params };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn file_stem(path: &Path) -> anyhow::Result<String> {
    match path.file_stem().and_then(|s| s.to_str()) {
        Some(s) => Ok(s.to_owned()),
        None => bail!("cannot derive an image id from {}", path.display()),
    }
}

fn metrics(args: MetricsArgs) -> anyhow::Result<()> {
    let mut externals = Vec::new();
    for (name, direction, path) in [
        ("LPIPS", Direction::LowerBetter, args.lpips),
        ("CLIP Score", Direction::HigherBetter, args.clip),
        ("Identity Score", Direction::HigherBetter, args.identity),
    ] {
        if let Some(path) = path {
            externals.push(ExternalMetric { name: name.to_owned(), direction, path });
        }
    }
    let reports = evaluate(&args.manifest, &args.predictions, args.split, &externals)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        print!("{}", render_table(&args.column, &reports));
    }
    Ok(())
}

fn preview(cmd: PreviewCommand) -> anyhow::Result<()> {
    match cmd {
        PreviewCommand::Triplets { manifest, count, tile, seed, out } => {
            contact_sheet(&manifest, count, tile, seed, &out)
        }
        PreviewCommand::Patterns { size, seed, out } => {
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for kind in PatternKind::ALL {
                let field = generate_pattern(kind, size, size, seed)?;
                save_gray(size, size, field.data(), out.join(format!("{}.png", kind.name())))?;
            }
            println!("wrote {} patterns to {}", PatternKind::ALL.len(), out.display());
            Ok(())
        }
    }
}

/// One row per sampled record: degraded on the left, ground truth on the right.
fn contact_sheet(manifest: &Path, count: usize, tile: usize, seed: u64, out: &Path) -> anyhow::Result<()> {
    if tile == 0 {
        bail!("--tile must be positive");
    }
    let root = manifest.parent().unwrap_or(Path::new("."));
    let mut records = read_manifest(manifest)?;
    if records.is_empty() {
        bail!("{} has no records", manifest.display());
    }
    let mut rng = rng_from_seed(seed);
    let n = count.min(records.len());
    for i in 0..n {
        let j = i + below(&mut rng, (records.len() - i) as u64) as usize;
        records.swap(i, j);
    }
    records.truncate(n);

    let (width, height) = (2 * tile, n * tile);
    let mut sheet = vec![0.0f32; width * height * 3];
    for (row, record) in records.iter().enumerate() {
        for (col, rel) in [&record.input_path, &record.output_path].into_iter().enumerate() {
            let img = load_image(root.join(rel))?.resize(tile, tile)?;
            paste(&mut sheet, width, &img, col * tile, row * tile);
        }
    }
    save_image(&ImageRgb::new(width, height, sheet)?, out)?;
    println!("wrote {n} triplets to {}", out.display());
    Ok(())
}

fn paste(sheet: &mut [f32], sheet_width: usize, img: &ImageRgb, x0: usize, y0: usize) {
    let w = img.width();
    for y in 0..img.height() {
        let src = &img.data()[y * w * 3..(y + 1) * w * 3];
        let start = ((y0 + y) * sheet_width + x0) * 3;
        sheet[start..start + w * 3].copy_from_slice(src);
    }
}
