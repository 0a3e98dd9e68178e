//! SSIM and mean ± std summaries of per-image metric values.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{read_manifest, TripletRecord};
use crate::error::{Error, Result};
use crate::filtering::Split;
use crate::image::{ensure_same_dims, load_image, ImageRgb};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::HigherBetter => "↑",
            Direction::LowerBetter => "↓",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub direction: Direction,
}

impl MetricReport {
    /// `mean ± std` at four decimals.
    pub fn formatted(&self) -> String {
        format!("{:.4} ± {:.4}", self.mean, self.std)
    }
}

fn ssim_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable 'valid' filtering: output is `(w - 10) x (h - 10)`.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = line[x..x + n].iter().zip(k).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| rows[(y + i) * ow + x] * k[i]).sum();
        }
    }
    out
}

/// Single-scale SSIM on Rec. 601 luma with an 11×11 Gaussian window
/// (σ = 1.5), K1 = 0.01, K2 = 0.03, dynamic range 1; the mean of the SSIM map
/// over all window positions that fit inside the image.
pub fn ssim(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidDimensions(w, h));
    }
    let (x, y) = (a.luma(), b.luma());
    let k = ssim_window();
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let prod = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(u, v)| u * v).collect() };
    let mu_x = filter_valid(&x, w, h, &k);
    let mu_y = filter_valid(&y, w, h, &k);
    let xx = filter_valid(&prod(&x, &x), w, h, &k);
    let yy = filter_valid(&prod(&y, &y), w, h, &k);
    let xy = filter_valid(&prod(&x, &y), w, h, &k);
    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = xx[i] - mx * mx;
            let vy = yy[i] - my * my;
            let cov = xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}

/// Mean and population standard deviation.
pub fn aggregate(values: &[f64], name: &str, direction: Direction) -> Result<MetricReport> {
    if values.is_empty() {
        return Err(Error::EmptyMetric(name.to_owned()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(MetricReport {
        name: name.to_owned(),
        mean,
        std: var.sqrt(),
        n: values.len(),
        direction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalRow {
    pub image_id: String,
    pub value: f64,
}

/// Reads a metric sidecar; every id must be in `known_ids`.
pub fn collect_external(path: &Path, known_ids: &HashSet<String>) -> Result<Vec<(String, f64)>> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ExternalRow = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            line: n + 1,
            detail: e.to_string(),
        })?;
        if !row.value.is_finite() {
            return Err(Error::MalformedRow {
                line: n + 1,
                detail: format!("non-finite value for {}", row.image_id),
            });
        }
        if !known_ids.contains(&row.image_id) {
            return Err(Error::UnknownId(row.image_id));
        }
        out.push((row.image_id, row.value));
    }
    Ok(out)
}

pub fn write_external(path: &Path, rows: &[(String, f64)]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (id, value) in rows {
        let row = ExternalRow {
            image_id: id.clone(),
            value: *value,
        };
        serde_json::to_writer(&mut out, &row).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// A deep-network metric computed elsewhere and ingested from a sidecar.
#[derive(Debug, Clone)]
pub struct ExternalMetric {
    pub name: String,
    pub direction: Direction,
    pub path: PathBuf,
}

/// Scores predictions for every manifest record in `split` (all records when
/// `None`). Predictions are `<predictions_dir>/<image_id>.png`; ground truth
/// is resolved relative to the manifest's directory.
pub fn evaluate(
    manifest_path: &Path,
    predictions_dir: &Path,
    split: Option<Split>,
    externals: &[ExternalMetric],
) -> Result<Vec<MetricReport>> {
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let records: Vec<TripletRecord> = read_manifest(manifest_path)?
        .into_iter()
        .filter(|r| split.is_none_or(|s| r.split == s))
        .collect();
    let ids: HashSet<String> = records.iter().map(|r| r.image_id.clone()).collect();

    let mut reports = Vec::new();
    let scores = records
        .iter()
        .map(|r| {
            let truth = load_image(root.join(&r.output_path))?;
            let pred = load_image(predictions_dir.join(format!("{}.png", r.image_id)))?;
            let pred = if pred.dims() == truth.dims() {
                pred
            } else {
                pred.resize(truth.width(), truth.height())?
            };
            ssim(&pred, &truth)
        })
        .collect::<Result<Vec<f64>>>()?;
    if !scores.is_empty() {
        reports.push(aggregate(&scores, "SSIM", Direction::HigherBetter)?);
    }
    for ext in externals {
        let values: BTreeMap<String, f64> = collect_external(&ext.path, &ids)?.into_iter().collect();
        let values: Vec<f64> = values.into_values().collect();
        reports.push(aggregate(&values, &ext.name, ext.direction)?);
    }
    Ok(reports)
}

/// Plain-text table, one metric per row.
pub fn render_table(column: &str, reports: &[MetricReport]) -> String {
    let mut out = format!("{:<18} {}\n", "Metric", column);
    for r in reports {
        let label = format!("{} {}", r.name, r.direction.arrow());
        out.push_str(&format!("{:<18} {}   (n = {})\n", label, r.formatted(), r.n));
    }
    out
}
