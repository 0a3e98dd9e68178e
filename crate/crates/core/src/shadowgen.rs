//! Procedural cast-shadow patterns and compositing.
//!
//! A pattern is a field in `[0, 1]` where 1 means fully occluded. Every
//! generator is a pure function of `(kind, width, height, seed)`: geometry
//! parameters come from a ChaCha stream keyed on the seed and the kind, and
//! the fBm lattice is a stateless hash.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::blur::blur_plane;
use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, single_channel, ImageRgb, Mask};
use crate::rng::{below, rng_from_seed, splitmix64, unit, uniform, EngineRng};

pub const DEFAULT_OPACITY_RANGE: (f64, f64) = (0.35, 0.6);
/// Blur range at the reference resolution; scaled linearly with size.
pub const DEFAULT_BLUR_RANGE: (f64, f64) = (2.0, 8.0);
pub const BLUR_REFERENCE_SIZE: f64 = 512.0;
pub const DEFAULT_GRAY: f32 = 0.5;
pub const MIN_PATTERN_SIZE: usize = 16;

single_channel!(
    /// Occlusion field in `[0, 1]`, 1 = fully shadowed.
    PatternField
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    VenetianBlinds,
    WindowFrame,
    FoliageFbm,
    Branches,
    Curtains,
    Fence,
    ArchScreen,
    // Not among the generators named for the published dataset.
    Lattice,
    PalmFronds,
    CloudNoise,
}

impl PatternKind {
    pub const ALL: [PatternKind; 10] = [
        PatternKind::VenetianBlinds,
        PatternKind::WindowFrame,
        PatternKind::FoliageFbm,
        PatternKind::Branches,
        PatternKind::Curtains,
        PatternKind::Fence,
        PatternKind::ArchScreen,
        PatternKind::Lattice,
        PatternKind::PalmFronds,
        PatternKind::CloudNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::VenetianBlinds => "venetian_blinds",
            PatternKind::WindowFrame => "window_frame",
            PatternKind::FoliageFbm => "foliage_fbm",
            PatternKind::Branches => "branches",
            PatternKind::Curtains => "curtains",
            PatternKind::Fence => "fence",
            PatternKind::ArchScreen => "arch_screen",
            PatternKind::Lattice => "lattice",
            PatternKind::PalmFronds => "palm_fronds",
            PatternKind::CloudNoise => "cloud_noise",
        }
    }

    /// Whether this generator is an engine addition rather than one of the
    /// seven named for the published dataset.
    pub fn is_engine_addition(self) -> bool {
        matches!(
            self,
            PatternKind::Lattice | PatternKind::PalmFronds | PatternKind::CloudNoise
        )
    }

    fn index(self) -> u64 {
        PatternKind::ALL.iter().position(|k| *k == self).unwrap() as u64
    }
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PatternKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown pattern kind {s:?}")))
    }
}

pub type PatternWeights = BTreeMap<PatternKind, f64>;

pub fn uniform_weights() -> PatternWeights {
    PatternKind::ALL.into_iter().map(|k| (k, 0.1)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowParams {
    pub kind: PatternKind,
    pub opacity: f64,
    pub blur_sigma: f64,
    pub pattern_seed: u64,
}

// ---------------------------------------------------------------------------
// Value noise and fBm

/// Lattice value in `[-1, 1)` for integer cell `(ix, iy)`.
#[inline]
fn lattice(ix: i64, iy: i64, seed: u64) -> f64 {
    let h = splitmix64(
        splitmix64(seed)
            ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F),
    );
    (h >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

/// Smoothstep-interpolated value noise in `[-1, 1]`.
pub fn value_noise(x: f64, y: f64, seed: u64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = lattice(ix, iy, seed);
    let b = lattice(ix + 1, iy, seed);
    let c = lattice(ix, iy + 1, seed);
    let d = lattice(ix + 1, iy + 1, seed);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

/// `Σ_i gain^i · noise(x·lacunarity^i, y·lacunarity^i, seed ⊕ i)`.
pub fn fbm(x: f64, y: f64, octaves: u32, lacunarity: f64, gain: f64, seed: u64) -> f64 {
    let mut sum = 0.0;
    let mut amplitude = 1.0;
    let mut frequency = 1.0;
    for i in 0..octaves.max(1) {
        sum += amplitude * value_noise(x * frequency, y * frequency, seed ^ i as u64);
        amplitude *= gain;
        frequency *= lacunarity;
    }
    sum
}

// ---------------------------------------------------------------------------
// Generators

/// Rotated periodic stripes; a pixel is occluded while the stripe phase is
/// below `duty`.
pub fn venetian_blinds(w: usize, h: usize, period: f64, angle: f64, duty: f64, phase: f64) -> PatternField {
    let (c, s) = (angle.cos(), angle.sin());
    PatternField::from_fn(w, h, |x, y| {
        let t = (x as f64 + 0.5) * c + (y as f64 + 0.5) * s;
        let f = ((t + phase) / period).rem_euclid(1.0);
        if f < duty {
            1.0
        } else {
            0.0
        }
    })
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn smoothstep(e0: f64, e1: f64, v: f64) -> f64 {
    let t = ((v - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Binary raster of tapered capsules.
struct Canvas {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        Self {
            w,
            h,
            data: vec![0.0; w * h],
        }
    }

    /// Fills pixels within the linearly interpolated radius of segment `ab`.
    fn capsule(&mut self, a: (f64, f64), b: (f64, f64), ra: f64, rb: f64) {
        let rmax = ra.max(rb);
        let x0 = ((a.0.min(b.0) - rmax).floor().max(0.0)) as usize;
        let y0 = ((a.1.min(b.1) - rmax).floor().max(0.0)) as usize;
        let x1 = ((a.0.max(b.0) + rmax).ceil()).min(self.w as f64 - 1.0);
        let y1 = ((a.1.max(b.1) + rmax).ceil()).min(self.h as f64 - 1.0);
        if x1 < 0.0 || y1 < 0.0 {
            return;
        }
        let (x1, y1) = (x1 as usize, y1 as usize);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let t = if len2 > 0.0 {
                    (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
                let r = ra + (rb - ra) * t;
                if (px - cx).powi(2) + (py - cy).powi(2) <= r * r {
                    self.data[y * self.w + x] = 1.0;
                }
            }
        }
    }

    fn into_field(self) -> PatternField {
        PatternField {
            width: self.w,
            height: self.h,
            data: self.data,
        }
    }
}

fn field_from_values(w: usize, h: usize, values: Vec<f64>) -> PatternField {
    PatternField {
        width: w,
        height: h,
        data: values.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect(),
    }
}

fn window_frame(w: usize, h: usize, rng: &mut EngineRng) -> PatternField {
    let (wf, hf) = (w as f64, h as f64);
    let s = wf.min(hf);
    let left = uniform(rng, 0.05, 0.3) * wf;
    let right = uniform(rng, 0.7, 0.95) * wf;
    let top = uniform(rng, 0.05, 0.3) * hf;
    let bottom = uniform(rng, 0.7, 0.95) * hf;
    let (cols, rows) = [(2, 1), (1, 2), (2, 2)][below(rng, 3) as usize];
    let bar = uniform(rng, 0.03, 0.06) * s;
    let skew = uniform(rng, -0.3, 0.3);
    let (cx, cy) = (wf / 2.0, hf / 2.0);
    let (c, sn) = (skew.cos(), skew.sin());
    let pane_w = (right - left) / cols as f64;
    let pane_h = (bottom - top) / rows as f64;
    PatternField::from_fn(w, h, |x, y| {
        // Rotate into window coordinates.
        let (px, py) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        let (u, v) = (px * c + py * sn + cx, -px * sn + py * c + cy);
        if u < left || u > right || v < top || v > bottom {
            return 1.0;
        }
        let du = (u - left) % pane_w;
        let dv = (v - top) % pane_h;
        let half = bar / 2.0;
        let near_u = du < half || du > pane_w - half || u < left + bar || u > right - bar;
        let near_v = dv < half || dv > pane_h - half || v < top + bar || v > bottom - bar;
        if near_u || near_v {
            1.0
        } else {
            0.0
        }
    })
}

fn foliage(w: usize, h: usize, rng: &mut EngineRng, noise_seed: u64) -> PatternField {
    let s = w.min(h) as f64;
    let scale = uniform(rng, 0.12, 0.25) * s;
    let (ox, oy) = (uniform(rng, 0.0, 1000.0), uniform(rng, 0.0, 1000.0));
    let open_fraction = uniform(rng, 0.35, 0.65);
    let values: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            fbm(x / scale + ox, y / scale + oy, 5, 2.0, 0.5, noise_seed)
        })
        .collect();
    let t = quantile(&values, open_fraction);
    let occluded = values.into_iter().map(|v| if v > t { 1.0 } else { 0.0 }).collect();
    field_from_values(w, h, occluded)
}

fn branches(w: usize, h: usize, rng: &mut EngineRng) -> PatternField {
    let (wf, hf) = (w as f64, h as f64);
    let s = wf.min(hf);
    let mut canvas = Canvas::new(w, h);
    let count = 3 + below(rng, 3);
    let step = 0.05 * s;
    for _ in 0..count {
        // Start on a random edge, heading roughly toward the center.
        let edge = below(rng, 4);
        let along = unit(rng);
        let start = match edge {
            0 => (along * wf, 0.0),
            1 => (wf, along * hf),
            2 => (along * wf, hf),
            _ => (0.0, along * hf),
        };
        let toward = (hf / 2.0 - start.1).atan2(wf / 2.0 - start.0);
        let heading = toward + uniform(rng, -0.6, 0.6);
        let length = uniform(rng, 0.8, 1.4) * s;
        let radius = uniform(rng, 0.025, 0.045) * s;
        let mut stack = vec![(start, heading, length, radius, 0u32)];
        while let Some((mut p, mut dir, len, r0, depth)) = stack.pop() {
            let steps = (len / step).ceil().max(1.0) as usize;
            for i in 0..steps {
                let t0 = i as f64 / steps as f64;
                let t1 = (i + 1) as f64 / steps as f64;
                dir += uniform(rng, -0.35, 0.35);
                let q = (p.0 + step * dir.cos(), p.1 + step * dir.sin());
                canvas.capsule(p, q, r0 * (1.0 - 0.7 * t0), r0 * (1.0 - 0.7 * t1));
                if depth < 2 && unit(rng) < 0.3 {
                    let side = if unit(rng) < 0.5 { -1.0 } else { 1.0 };
                    let fork = dir + side * uniform(rng, 0.4, 1.0);
                    stack.push((q, fork, 0.4 * len * (1.0 - t1), 0.6 * r0 * (1.0 - 0.7 * t1), depth + 1));
                }
                p = q;
            }
        }
    }
    canvas.into_field()
}

fn curtains(w: usize, h: usize, rng: &mut EngineRng) -> PatternField {
    let s = w.min(h) as f64;
    let p1 = uniform(rng, 0.15, 0.35) * s;
    let p2 = uniform(rng, 0.05, 0.12) * s;
    let (phi1, phi2) = (uniform(rng, 0.0, TAU), uniform(rng, 0.0, TAU));
    let a2 = uniform(rng, 0.2, 0.5);
    let sway_period = uniform(rng, 0.5, 1.0) * s;
    let sway = 0.03 * s;
    let values = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            let xs = x + sway * (TAU * y / sway_period).sin();
            let wave = (TAU * xs / p1 + phi1).sin() + a2 * (TAU * xs / p2 + phi2).sin();
            0.5 + 0.5 * wave / (1.0 + a2)
        })
        .collect();
    field_from_values(w, h, values)
}

fn fence(w: usize, h: usize, rng: &mut EngineRng) -> PatternField {
    let (wf, hf) = (w as f64, h as f64);
    let s = wf.min(hf);
    let period = uniform(rng, 0.08, 0.16) * s;
    let slat = uniform(rng, 0.35, 0.6);
    let phase = uniform(rng, 0.0, period);
    let tilt = uniform(rng, -0.15, 0.15);
    let rails = [uniform(rng, 0.15, 0.35) * hf, uniform(rng, 0.6, 0.85) * hf];
    let thickness = uniform(rng, 0.04, 0.07) * s;
    let (c, sn) = (tilt.cos(), tilt.sin());
    PatternField::from_fn(w, h, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let u = px * c + py * sn;
        let v = -px * sn + py * c;
        let on_slat = ((u + phase) / period).rem_euclid(1.0) < slat;
        let on_rail = rails.iter().any(|r| (v - r).abs() < thickness / 2.0);
        if on_slat || on_rail {
            1.0
        } else {
            0.0
        }
    })
}

fn arch_screen(w: usize, h: usize, rng: &mut EngineRng) -> PatternField {
    let s = w.min(h) as f64;
    let tile = uniform(rng, 0.1, 0.2) * s;
    let motif = below(rng, 3);
    let size = uniform(rng, 0.3, 0.45);
    let half_width = uniform(rng, 0.2, 0.35);
    let brick = unit(rng) < 0.5;
    let (ox, oy) = (uniform(rng, 0.0, tile), uniform(rng, 0.0, tile));
    PatternField::from_fn(w, h, |x, y| {
        let (px, py) = ((x as f64 + 0.5 + ox) / tile, (y as f64 + 0.5 + oy) / tile);
        let row = py.floor();
        let shift = if brick && (row as i64).rem_euclid(2) == 1 { 0.5 } else { 0.0 };
        let (u, v) = ((px + shift).rem_euclid(1.0) - 0.5, py.rem_euclid(1.0) - 0.5);
        let open = match motif {
            0 => u * u + v * v < size * size,
            1 => u.abs() + v.abs() < size,
            _ => {
                // Round-topped arch: a rectangle under a half disc.
                let shaft = u.abs() < half_width && (-0.15..0.4).contains(&v);
                let crown = v < -0.15 && u * u + (v + 0.15).powi(2) < half_width * half_width;
                shaft || crown
            }
        };
        if open {
            0.0
        } else {
            1.0
        }
    })
}

fn lattice_pattern(w: usize, h: usize, rng: &mut EngineRng) -> PatternField {
    let s = w.min(h) as f64;
    let angle_a = uniform(rng, 0.0, PI);
    let angle_b = angle_a + uniform(rng, PI / 3.0, 2.0 * PI / 3.0);
    let stripes = [
        (angle_a, uniform(rng, 0.08, 0.15) * s, uniform(rng, 0.15, 0.3), uniform(rng, 0.0, 1.0)),
        (angle_b, uniform(rng, 0.08, 0.15) * s, uniform(rng, 0.15, 0.3), uniform(rng, 0.0, 1.0)),
    ];
    PatternField::from_fn(w, h, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let hit = stripes.iter().any(|&(angle, period, duty, phase)| {
            let t = px * angle.cos() + py * angle.sin();
            (t / period + phase).rem_euclid(1.0) < duty
        });
        if hit {
            1.0
        } else {
            0.0
        }
    })
}

fn palm_fronds(w: usize, h: usize, rng: &mut EngineRng) -> PatternField {
    let (wf, hf) = (w as f64, h as f64);
    let s = wf.min(hf);
    let center = (uniform(rng, 0.1, 0.9) * wf, uniform(rng, 0.1, 0.9) * hf);
    let count = 5 + below(rng, 4);
    let base = uniform(rng, 0.0, TAU);
    let mut canvas = Canvas::new(w, h);
    for f in 0..count {
        let mut dir = base + TAU * f as f64 / count as f64 + uniform(rng, -0.25, 0.25);
        let bend = uniform(rng, -0.04, 0.04);
        let length = uniform(rng, 0.5, 0.9) * s;
        let leaflet_len = uniform(rng, 0.1, 0.2) * s;
        let spread = uniform(rng, 0.5, 0.9);
        let steps = (length / (0.03 * s)).ceil() as usize;
        let seg = length / steps as f64;
        let mut p = center;
        for i in 0..steps {
            let t = (i + 1) as f64 / steps as f64;
            dir += bend;
            let q = (p.0 + seg * dir.cos(), p.1 + seg * dir.sin());
            canvas.capsule(p, q, 0.012 * s * (1.0 - 0.5 * t), 0.012 * s * (1.0 - 0.5 * t));
            let reach = leaflet_len * (1.0 - 0.6 * t);
            for side in [-1.0, 1.0] {
                let a = dir + side * spread;
                let tip = (q.0 + reach * a.cos(), q.1 + reach * a.sin());
                canvas.capsule(q, tip, 0.014 * s, 0.002 * s);
            }
            p = q;
        }
    }
    canvas.into_field()
}

fn cloud_noise(w: usize, h: usize, rng: &mut EngineRng, noise_seed: u64) -> PatternField {
    let s = w.min(h) as f64;
    let scale = uniform(rng, 0.2, 0.4) * s;
    let (ox, oy) = (uniform(rng, 0.0, 1000.0), uniform(rng, 0.0, 1000.0));
    let q = uniform(rng, 0.4, 0.6);
    let softness = uniform(rng, 0.3, 0.6);
    let values: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            fbm(x / scale + ox, y / scale + oy, 4, 2.0, 0.5, noise_seed)
        })
        .collect();
    let t = quantile(&values, q);
    let spread = (quantile(&values, 0.9) - quantile(&values, 0.1)) / 2.0;
    let half = (softness * spread).max(1e-6);
    let soft = values.iter().map(|&v| smoothstep(t - half, t + half, v)).collect();
    field_from_values(w, h, soft)
}

/// Deterministic occlusion field for `(kind, w, h, seed)`.
pub fn generate_pattern(kind: PatternKind, w: usize, h: usize, seed: u64) -> Result<PatternField> {
    if w < MIN_PATTERN_SIZE || h < MIN_PATTERN_SIZE {
        return Err(Error::InvalidDimensions(w, h));
    }
    let stream = splitmix64(seed ^ splitmix64(kind.index() + 1));
    let mut rng = rng_from_seed(stream);
    let s = w.min(h) as f64;
    let field = match kind {
        PatternKind::VenetianBlinds => {
            let period = uniform(&mut rng, 0.06, 0.14) * s;
            let vertical = unit(&mut rng) < 0.3;
            let tilt = uniform(&mut rng, -0.6, 0.6);
            let angle = tilt + if vertical { 0.0 } else { PI / 2.0 };
            let duty = uniform(&mut rng, 0.35, 0.6);
            let phase = uniform(&mut rng, 0.0, period);
            venetian_blinds(w, h, period, angle, duty, phase)
        }
        PatternKind::WindowFrame => window_frame(w, h, &mut rng),
        PatternKind::FoliageFbm => foliage(w, h, &mut rng, splitmix64(stream)),
        PatternKind::Branches => branches(w, h, &mut rng),
        PatternKind::Curtains => curtains(w, h, &mut rng),
        PatternKind::Fence => fence(w, h, &mut rng),
        PatternKind::ArchScreen => arch_screen(w, h, &mut rng),
        PatternKind::Lattice => lattice_pattern(w, h, &mut rng),
        PatternKind::PalmFronds => palm_fronds(w, h, &mut rng),
        PatternKind::CloudNoise => cloud_noise(w, h, &mut rng, splitmix64(stream)),
    };
    Ok(field)
}

/// Categorical draw proportional to `weights`; missing kinds weigh zero.
pub fn select_pattern(weights: &PatternWeights, rng: &mut impl RngCore) -> Result<PatternKind> {
    if weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Config("pattern weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.values().sum();
    if total <= 0.0 {
        return Err(Error::ZeroWeights);
    }
    let target = unit(rng) * total;
    let mut cumulative = 0.0;
    let mut last = None;
    for kind in PatternKind::ALL {
        let w = weights.get(&kind).copied().unwrap_or(0.0);
        if w == 0.0 {
            continue;
        }
        cumulative += w;
        last = Some(kind);
        if target < cumulative {
            return Ok(kind);
        }
    }
    Ok(last.expect("at least one positive weight"))
}

/// Blurs the pattern and darkens subject pixels by `1 - m · opacity · P'`.
pub fn composite_shadow(
    img: &ImageRgb,
    pattern: &PatternField,
    mask: &Mask,
    params: &ShadowParams,
) -> Result<ImageRgb> {
    ensure_same_dims(img.dims(), pattern.dims())?;
    ensure_same_dims(img.dims(), mask.dims())?;
    if !(0.0..=1.0).contains(&params.opacity) {
        return Err(Error::Config(format!("opacity {} outside [0, 1]", params.opacity)));
    }
    let blurred = blur_plane(pattern.data(), pattern.width(), pattern.height(), 1, params.blur_sigma)?;
    let data = img
        .data()
        .chunks_exact(3)
        .zip(blurred)
        .zip(mask.data())
        .flat_map(|((p, occ), &m)| {
            let gain = 1.0 - m.clamp(0.0, 1.0) as f64 * params.opacity * occ.clamp(0.0, 1.0) as f64;
            [
                (p[0] as f64 * gain) as f32,
                (p[1] as f64 * gain) as f32,
                (p[2] as f64 * gain) as f32,
            ]
        })
        .collect();
    ImageRgb::new(img.width(), img.height(), data)
}

/// `m · img + (1 - m) · gray` per channel.
pub fn place_on_gray(img: &ImageRgb, mask: &Mask, gray: f32) -> Result<ImageRgb> {
    ensure_same_dims(img.dims(), mask.dims())?;
    if !(0.0..=1.0).contains(&gray) {
        return Err(Error::Config(format!("gray level {gray} outside [0, 1]")));
    }
    let data = img
        .data()
        .chunks_exact(3)
        .zip(mask.data())
        .flat_map(|(p, &m)| {
            let m = m.clamp(0.0, 1.0) as f64;
            let g = gray as f64;
            [
                (m * p[0] as f64 + (1.0 - m) * g) as f32,
                (m * p[1] as f64 + (1.0 - m) * g) as f32,
                (m * p[2] as f64 + (1.0 - m) * g) as f32,
            ]
        })
        .collect();
    ImageRgb::new(img.width(), img.height(), data)
}
