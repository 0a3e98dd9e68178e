use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtering::{SplitCounts, DEFAULT_PROMPTS, DEFAULT_THRESHOLD};
use crate::intrinsic::MsrConfig;
use crate::relight::{DEFAULT_AMBIENT_RANGE, DEFAULT_GRADIENT_SCALE};
use crate::shadowgen::{
    uniform_weights, PatternWeights, BLUR_REFERENCE_SIZE, DEFAULT_BLUR_RANGE, DEFAULT_GRAY,
    DEFAULT_OPACITY_RANGE,
};

/// Input and output locations. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Source images, `<id>.png` / `<id>.jpg`.
    pub images: PathBuf,
    /// Scores sidecar (line-delimited JSON).
    pub scores: PathBuf,
    /// Mask PNGs, `<id>.png`.
    pub masks: PathBuf,
    /// 16-bit depth PNGs, `<id>.png`.
    pub depth: PathBuf,
    /// Instructions sidecar (line-delimited JSON).
    pub instructions: PathBuf,
    pub output: PathBuf,
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.images,
            &mut self.scores,
            &mut self.masks,
            &mut self.depth,
            &mut self.instructions,
            &mut self.output,
        ] {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShadowConfig {
    pub weights: PatternWeights,
    pub opacity_range: (f64, f64),
    /// Blur sigma range in pixels at 512×512, scaled with resolution.
    pub blur_range: (f64, f64),
    pub gray: f32,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        Self {
            weights: uniform_weights(),
            opacity_range: DEFAULT_OPACITY_RANGE,
            blur_range: DEFAULT_BLUR_RANGE,
            gray: DEFAULT_GRAY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub threshold: f64,
    pub prompts: Vec<String>,
    pub target_resolution: usize,
    pub msr: MsrConfig,
    pub ambient_range: (f64, f64),
    pub gradient_scale: f64,
    pub shadow: ShadowConfig,
    pub splits: SplitCounts,
    pub global_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            threshold: DEFAULT_THRESHOLD,
            prompts: DEFAULT_PROMPTS.iter().map(|s| s.to_string()).collect(),
            target_resolution: 512,
            msr: MsrConfig::default(),
            ambient_range: DEFAULT_AMBIENT_RANGE,
            gradient_scale: DEFAULT_GRADIENT_SCALE,
            shadow: ShadowConfig::default(),
            splits: SplitCounts::PUBLISHED,
            global_seed: 0,
        }
    }
}

fn unit_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Config(format!("{name} must satisfy 0 <= lo <= hi <= 1, got ({lo}, {hi})")));
    }
    Ok(())
}

impl PipelineConfig {
    /// Reads a TOML (or JSON, by extension) config and resolves its paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut cfg: PipelineConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        if self.prompts.is_empty() {
            return Err(Error::Config("at least one prompt is required".into()));
        }
        if self.target_resolution < 64 {
            return Err(Error::Config(format!(
                "target resolution must be at least 64, got {}",
                self.target_resolution
            )));
        }
        self.msr.validate()?;
        unit_range("ambient_range", self.ambient_range)?;
        unit_range("shadow.opacity_range", self.shadow.opacity_range)?;
        unit_range("msr.blend_range", self.msr.blend_range)?;
        let (blo, bhi) = self.shadow.blur_range;
        if !(0.0 <= blo && blo <= bhi && bhi.is_finite()) {
            return Err(Error::Config("shadow.blur_range must satisfy 0 <= lo <= hi".into()));
        }
        if !(0.0..=1.0).contains(&self.shadow.gray) {
            return Err(Error::Config("shadow.gray must be in [0, 1]".into()));
        }
        if !(self.gradient_scale > 0.0 && self.gradient_scale.is_finite()) {
            return Err(Error::Config("gradient_scale must be positive".into()));
        }
        if self.shadow.weights.values().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.shadow.weights.values().sum::<f64>() <= 0.0
        {
            return Err(Error::Config("shadow.weights must be non-negative with a positive sum".into()));
        }
        Ok(())
    }

    /// Blur range scaled from the 512 px reference to the target resolution.
    pub fn scaled_blur_range(&self) -> (f64, f64) {
        let f = self.target_resolution as f64 / BLUR_REFERENCE_SIZE;
        (self.shadow.blur_range.0 * f, self.shadow.blur_range.1 * f)
    }
}
