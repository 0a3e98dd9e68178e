//! Multi-Scale Retinex albedo estimation on the masked foreground.
//!
//! Reflectance is the weighted sum over surround scales of
//! `ln((I + ε) / (G_σ * I + ε))`, computed per channel on `I ⊙ M`. The
//! log-domain result is mapped to `[0, 1]` per channel from percentiles of
//! the subject pixels, then blended back toward the original foreground.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::blur::blur_plane;
use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, ImageRgb, Mask};
use crate::rng::uniform;

/// Mask samples above this count as subject pixels for statistics and
/// background zeroing.
pub const MASK_ON: f32 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MsrConfig {
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub epsilon: f64,
    pub norm_percentiles: (f64, f64),
    /// Range of the weight given to the original foreground when blending.
    pub blend_range: (f64, f64),
}

impl Default for MsrConfig {
    fn default() -> Self {
        Self {
            scales: vec![15.0, 80.0, 250.0],
            weights: vec![1.0 / 3.0; 3],
            epsilon: 1e-4,
            norm_percentiles: (1.0, 99.0),
            blend_range: (0.15, 0.25),
        }
    }
}

impl MsrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("msr: {m}")));
        if self.scales.is_empty() || self.scales.len() != self.weights.len() {
            return bad("scales and weights must be non-empty and the same length");
        }
        if self.scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("scales must be finite and non-negative");
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("weights must sum to 1");
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad("epsilon must be finite and non-negative");
        }
        let (lo, hi) = self.norm_percentiles;
        if !(0.0 <= lo && lo < hi && hi <= 100.0) {
            return bad("percentiles must satisfy 0 <= low < high <= 100");
        }
        let (a, b) = self.blend_range;
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return bad("blend range must satisfy 0 <= lo <= hi <= 1");
        }
        Ok(())
    }

    /// Single-scale configuration, mostly useful for tests and diagnostics.
    pub fn single_scale(sigma: f64) -> Self {
        Self {
            scales: vec![sigma],
            weights: vec![1.0],
            ..Self::default()
        }
    }
}

/// `I ⊙ M`, with the mask broadcast over channels.
pub fn apply_mask(img: &ImageRgb, mask: &Mask) -> Result<ImageRgb> {
    ensure_same_dims(img.dims(), mask.dims())?;
    let data = img
        .data()
        .chunks_exact(3)
        .zip(mask.data())
        .flat_map(|(p, &m)| [p[0] * m, p[1] * m, p[2] * m])
        .collect();
    ImageRgb::new(img.width(), img.height(), data)
}

/// Log-domain reflectance; values are unbounded.
pub fn msr_reflectance(img: &ImageRgb, mask: &Mask, cfg: &MsrConfig) -> Result<ImageRgb> {
    cfg.validate()?;
    let fg = apply_mask(img, mask)?;
    let (w, h) = fg.dims();
    let eps = cfg.epsilon;
    let mut acc = vec![0.0f64; fg.data().len()];
    for (&sigma, &weight) in cfg.scales.iter().zip(&cfg.weights) {
        let surround = blur_plane(fg.data(), w, h, 3, sigma)?;
        for ((r, &v), &s) in acc.iter_mut().zip(fg.data()).zip(&surround) {
            *r += weight * ((v as f64 + eps) / (s as f64 + eps)).ln();
        }
    }
    ImageRgb::new(w, h, acc.into_iter().map(|v| v as f32).collect())
}

/// Linear-interpolated percentile of sorted data, `p` in `[0, 100]`.
fn percentile(sorted: &[f32], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * t
}

/// Per-channel percentile stretch of subject pixels to `[0, 1]`.
///
/// Background pixels come out as 0. A channel whose percentile span is below
/// 1e-6 maps to a flat 0.5 on the subject.
pub fn color_normalize(r: &ImageRgb, mask: &Mask, percentiles: (f64, f64)) -> Result<ImageRgb> {
    ensure_same_dims(r.dims(), mask.dims())?;
    let on: Vec<usize> = mask
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > MASK_ON)
        .map(|(i, _)| i)
        .collect();
    if on.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut out = vec![0.0f32; r.data().len()];
    let mut values = Vec::with_capacity(on.len());
    for c in 0..3 {
        values.clear();
        values.extend(on.iter().map(|&i| r.data()[3 * i + c]));
        values.sort_unstable_by(f32::total_cmp);
        let lo = percentile(&values, percentiles.0);
        let hi = percentile(&values, percentiles.1);
        let span = hi - lo;
        for &i in &on {
            out[3 * i + c] = if span < 1e-6 {
                0.5
            } else {
                ((r.data()[3 * i + c] as f64 - lo) / span).clamp(0.0, 1.0) as f32
            };
        }
    }
    ImageRgb::new(r.width(), r.height(), out)
}

/// `alpha * original + (1 - alpha) * albedo`, clamped to `[0, 1]`.
pub fn blend_albedo(albedo: &ImageRgb, original: &ImageRgb, alpha: f64) -> Result<ImageRgb> {
    ensure_same_dims(albedo.dims(), original.dims())?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("blend alpha {alpha} outside [0, 1]")));
    }
    let data = albedo
        .data()
        .iter()
        .zip(original.data())
        .map(|(&a, &o)| (alpha * o as f64 + (1.0 - alpha) * a as f64).clamp(0.0, 1.0) as f32)
        .collect();
    ImageRgb::new(albedo.width(), albedo.height(), data)
}

/// Full albedo stage. Returns the albedo (zero off the subject) and the
/// blend weight that was drawn.
pub fn extract_albedo(
    img: &ImageRgb,
    mask: &Mask,
    cfg: &MsrConfig,
    rng: &mut impl RngCore,
) -> Result<(ImageRgb, f64)> {
    let reflectance = msr_reflectance(img, mask, cfg)?;
    let normalized = color_normalize(&reflectance, mask, cfg.norm_percentiles)?;
    let alpha = uniform(rng, cfg.blend_range.0, cfg.blend_range.1);
    let foreground = apply_mask(img, mask)?;
    let mut albedo = blend_albedo(&normalized, &foreground, alpha)?;
    for (p, &m) in albedo.data_mut().chunks_exact_mut(3).zip(mask.data()) {
        if m <= MASK_ON {
            p.fill(0.0);
        }
    }
    Ok((albedo, alpha))
}
