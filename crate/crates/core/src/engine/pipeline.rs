//! Per-image stage composition.

use rand::RngCore;

use super::config::PipelineConfig;
use super::manifest::{DegradationParams, Stage, StageError, TripletRecord, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::filtering::Split;
use crate::image::{DepthMap, ImageRgb, Mask};
use crate::intrinsic::extract_albedo;
use crate::relight::{depth_to_normals, lambertian_shade, sample_light};
use crate::rng::{rng_from_seed, uniform};
use crate::shadowgen::{
    composite_shadow, generate_pattern, place_on_gray, select_pattern, ShadowParams,
};

pub const MAX_INSTRUCTION_CHARS: usize = 300;
const TERMINATORS: [char; 3] = ['.', '!', '?'];

/// Trims the text and appends a period when it has no closing terminator.
/// Accepts exactly one sentence: no line breaks, one terminator, at the end.
pub fn validate_instruction(text: &str) -> Result<String> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Error::EmptyInstruction);
    }
    if trimmed.contains(['\n', '\r']) {
        return Err(Error::MultiSentence);
    }
    let mut normalized = trimmed.to_owned();
    if !normalized.ends_with(TERMINATORS) {
        normalized.push('.');
    }
    let chars = normalized.chars().count();
    if chars > MAX_INSTRUCTION_CHARS {
        return Err(Error::OverlongInstruction(chars));
    }
    if normalized.matches(TERMINATORS).count() != 1 {
        return Err(Error::MultiSentence);
    }
    Ok(normalized)
}

/// Output of the degradation stages for one image.
#[derive(Debug, Clone)]
pub struct Degraded {
    /// Ground truth at the target resolution.
    pub ground_truth: ImageRgb,
    pub degraded: ImageRgb,
    pub params: DegradationParams,
}

/// Resize, albedo, shading, shadow and background stages. Random draws happen
/// in a fixed order from a stream seeded with `seed`: blend alpha, light
/// (two uniforms then ambient), pattern kind, opacity, blur sigma, pattern
/// seed.
pub fn degrade(
    id: &str,
    ground_truth: &ImageRgb,
    mask: &Mask,
    depth: &DepthMap,
    seed: u64,
    cfg: &PipelineConfig,
) -> std::result::Result<Degraded, StageError> {
    if mask.dims() != ground_truth.dims() {
        return Err(StageError::new(
            id,
            Stage::Mask,
            Error::DimensionMismatch { expected: ground_truth.dims(), actual: mask.dims() },
        ));
    }
    if depth.dims() != ground_truth.dims() {
        return Err(StageError::new(
            id,
            Stage::Degrade,
            Error::DimensionMismatch { expected: ground_truth.dims(), actual: depth.dims() },
        ));
    }
    let res = cfg.target_resolution;
    let at = |stage| move |e: Error| StageError::new(id, stage, e);

    let gt = ground_truth.resize(res, res).map_err(at(Stage::Load))?.clamp01();
    let mut mask = mask.resize(res, res).map_err(at(Stage::Mask))?;
    for m in mask.data_mut() {
        *m = m.clamp(0.0, 1.0);
    }
    let depth = depth.resize(res, res).map_err(at(Stage::Degrade))?;

    let mut rng = rng_from_seed(seed);
    let (albedo, alpha) = extract_albedo(&gt, &mask, &cfg.msr, &mut rng).map_err(at(Stage::Albedo))?;

    let normals = depth_to_normals(&depth, cfg.gradient_scale).map_err(at(Stage::Degrade))?;
    let light = sample_light(&mut rng, cfg.ambient_range);
    let shaded = lambertian_shade(&albedo, &normals, &light, &mask).map_err(at(Stage::Degrade))?;

    let kind = select_pattern(&cfg.shadow.weights, &mut rng).map_err(at(Stage::Degrade))?;
    let opacity = uniform(&mut rng, cfg.shadow.opacity_range.0, cfg.shadow.opacity_range.1);
    let (blur_lo, blur_hi) = cfg.scaled_blur_range();
    let blur_sigma = uniform(&mut rng, blur_lo, blur_hi);
    let pattern_seed = rng.next_u64();
    let shadow = ShadowParams { kind, opacity, blur_sigma, pattern_seed };
    let pattern = generate_pattern(kind, res, res, pattern_seed).map_err(at(Stage::Degrade))?;
    let shadowed = composite_shadow(&shaded, &pattern, &mask, &shadow).map_err(at(Stage::Degrade))?;
    let degraded = place_on_gray(&shadowed, &mask, cfg.shadow.gray)
        .map_err(at(Stage::Degrade))?
        .clamp01();

    Ok(Degraded {
        ground_truth: gt,
        degraded,
        params: DegradationParams {
            alpha,
            light_direction: light.direction,
            ambient: light.ambient,
            pattern_kind: kind,
            pattern_engine_addition: kind.is_engine_addition(),
            opacity,
            blur_sigma,
            pattern_seed,
        },
    })
}

pub fn degraded_rel_path(id: &str) -> String {
    format!("degraded/{id}.png")
}

pub fn ground_truth_rel_path(id: &str) -> String {
    format!("ground_truth/{id}.png")
}

/// A finished triplet: images plus its manifest row.
#[derive(Debug, Clone)]
pub struct Triplet {
    pub degraded: ImageRgb,
    pub ground_truth: ImageRgb,
    pub record: TripletRecord,
}

#[allow(clippy::too_many_arguments)]
pub fn process_image(
    id: &str,
    ground_truth: &ImageRgb,
    mask: &Mask,
    depth: &DepthMap,
    instruction: &str,
    score: f64,
    split: Split,
    seed: u64,
    cfg: &PipelineConfig,
) -> std::result::Result<Triplet, StageError> {
    let instruction =
        validate_instruction(instruction).map_err(|e| StageError::new(id, Stage::Instruction, e))?;
    let out = degrade(id, ground_truth, mask, depth, seed, cfg)?;
    Ok(Triplet {
        degraded: out.degraded,
        ground_truth: out.ground_truth,
        record: TripletRecord {
            schema_version: SCHEMA_VERSION,
            image_id: id.to_owned(),
            input_path: degraded_rel_path(id),
            output_path: ground_truth_rel_path(id),
            instruction,
            split,
            clip_score: score,
            seed,
            params: out.params,
        },
    })
}
