//! Depth-derived normals, hemisphere light sampling and Lambertian shading.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, DepthMap, ImageRgb, Mask};
use crate::rng::{unit, uniform};

pub const DEFAULT_GRADIENT_SCALE: f64 = 4.0;
pub const DEFAULT_AMBIENT_RANGE: (f64, f64) = (0.25, 0.45);

/// Unit normals, interleaved `(x, y, z)`, always facing the camera (`z > 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl NormalMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn normal(&self, x: usize, y: usize) -> [f32; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn normals(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(3)
    }
}

/// Central-difference normals with clamp-to-edge neighbours:
/// `n = normalize(-k ∂d/∂x, -k ∂d/∂y, 1)`.
pub fn depth_to_normals(depth: &DepthMap, gradient_scale: f64) -> Result<NormalMap> {
    let (w, h) = depth.dims();
    if w < 2 || h < 2 {
        return Err(Error::InvalidDimensions(w, h));
    }
    if !(gradient_scale > 0.0 && gradient_scale.is_finite()) {
        return Err(Error::Config(format!("gradient scale must be positive, got {gradient_scale}")));
    }
    let d = |x: usize, y: usize| depth.get(x, y) as f64;
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        let (up, down) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (left, right) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let gx = (d(right, y) - d(left, y)) / 2.0;
            let gy = (d(x, down) - d(x, up)) / 2.0;
            let (nx, ny) = (-gradient_scale * gx, -gradient_scale * gy);
            let len = (nx * nx + ny * ny + 1.0).sqrt();
            data.extend([(nx / len) as f32, (ny / len) as f32, (1.0 / len) as f32]);
        }
    }
    Ok(NormalMap {
        width: w,
        height: h,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightSample {
    pub direction: [f64; 3],
    pub ambient: f64,
}

/// Maps two uniforms to an area-uniform point on the upper hemisphere.
pub fn hemisphere_direction(u1: f64, u2: f64) -> [f64; 3] {
    let z = u1;
    let phi = 2.0 * std::f64::consts::PI * u2;
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Draws `u1`, `u2`, then the ambient level, in that order.
pub fn sample_light(rng: &mut impl RngCore, ambient_range: (f64, f64)) -> LightSample {
    let u1 = unit(rng);
    let u2 = unit(rng);
    let ambient = uniform(rng, ambient_range.0, ambient_range.1);
    LightSample {
        direction: hemisphere_direction(u1, u2),
        ambient,
    }
}

/// `a + (1 - a) * max(0, n·l)`.
#[inline]
pub fn shading_factor(normal: [f32; 3], light: &LightSample) -> f64 {
    let l = light.direction;
    let ndotl = normal[0] as f64 * l[0] + normal[1] as f64 * l[1] + normal[2] as f64 * l[2];
    light.ambient + (1.0 - light.ambient) * ndotl.max(0.0)
}

/// Shading field over the whole frame, ignoring the mask.
pub fn shading_field(normals: &NormalMap, light: &LightSample) -> Vec<f64> {
    normals
        .normals()
        .map(|n| shading_factor([n[0], n[1], n[2]], light))
        .collect()
}

/// Multiplies the albedo by the shading factor on the subject. The mask acts
/// as a weight, so pixels with `m = 0` pass through unchanged.
pub fn lambertian_shade(
    albedo: &ImageRgb,
    normals: &NormalMap,
    light: &LightSample,
    mask: &Mask,
) -> Result<ImageRgb> {
    ensure_same_dims(albedo.dims(), normals.dims())?;
    ensure_same_dims(albedo.dims(), mask.dims())?;
    let data = albedo
        .data()
        .chunks_exact(3)
        .zip(normals.normals())
        .zip(mask.data())
        .flat_map(|((p, n), &m)| {
            let s = shading_factor([n[0], n[1], n[2]], light);
            let gain = 1.0 + m.clamp(0.0, 1.0) as f64 * (s - 1.0);
            [
                (p[0] as f64 * gain) as f32,
                (p[1] as f64 * gain) as f32,
                (p[2] as f64 * gain) as f32,
            ]
        })
        .collect();
    ImageRgb::new(albedo.width(), albedo.height(), data)
}
