//! Separable Gaussian blur with clamp-to-edge boundaries.
//!
//! The kernel is sampled at integer offsets, truncated at `ceil(3σ)` and
//! renormalized. Short kernels are applied directly on the edge-padded line.
//! Long ones (the Retinex surround scales reach a radius of 750 px) go
//! through an FFT, two lines per complex transform: the clamped border
//! samples are constant, so their contribution is folded into precomputed
//! kernel tail sums and only the unpadded line is transformed.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{DepthMap, ImageRgb, Mask};

const DIRECT_MAX_RADIUS: usize = 32;

pub trait GaussianBlur: Sized {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self>;
}

/// Normalized kernel of length `2 * ceil(3σ) + 1`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Blurs an interleaved plane with `channels` samples per pixel.
pub fn blur_plane(
    src: &[f32],
    width: usize,
    height: usize,
    channels: usize,
    sigma: f64,
) -> Result<Vec<f32>> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::NegativeSigma(sigma));
    }
    debug_assert_eq!(src.len(), width * height * channels);
    if sigma == 0.0 {
        return Ok(src.to_vec());
    }
    let kernel = gaussian_kernel(sigma);
    let mut a: Vec<f64> = src.iter().map(|&v| v as f64).collect();
    let mut b = vec![0.0f64; a.len()];

    let row_stride = width * channels;
    // Horizontal lines: one per (row, channel).
    let horizontal: Vec<usize> = (0..height)
        .flat_map(|y| (0..channels).map(move |c| y * row_stride + c))
        .collect();
    LineConvolver::new(&kernel, width).run(&a, &mut b, &horizontal, channels);
    // Vertical lines: one per (column, channel).
    let vertical: Vec<usize> = (0..row_stride).collect();
    LineConvolver::new(&kernel, height).run(&b, &mut a, &vertical, row_stride);

    Ok(a.into_iter().map(|v| v as f32).collect())
}

enum Strategy {
    Direct,
    Fft {
        size: usize,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        spectrum: Vec<f64>,
        /// Kernel mass that lands left of index 0 / right of `len - 1`.
        left_mass: Vec<f64>,
        right_mass: Vec<f64>,
    },
}

/// Smallest `2^a 3^b 5^c` at or above `min`.
fn fft_size(min: usize) -> usize {
    let mut best = min.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut n = p35;
            while n < min {
                n *= 2;
            }
            best = best.min(n);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

struct LineConvolver<'k> {
    kernel: &'k [f64],
    radius: usize,
    len: usize,
    strategy: Strategy,
}

impl<'k> LineConvolver<'k> {
    fn new(kernel: &'k [f64], len: usize) -> Self {
        let radius = kernel.len() / 2;
        let strategy = if radius <= DIRECT_MAX_RADIUS {
            Strategy::Direct
        } else {
            // Offsets beyond len - 1 never pair two interior samples.
            let reach = radius.min(len - 1);
            let size = fft_size(len + reach);
            let mut planner = FftPlanner::<f64>::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let mut g = vec![Complex::new(0.0, 0.0); size];
            for (i, &w) in kernel.iter().enumerate() {
                let offset = i as isize - radius as isize;
                if offset.unsigned_abs() <= reach {
                    g[offset.rem_euclid(size as isize) as usize].re = w;
                }
            }
            // prefix[i] = sum of kernel[..i]
            let mut prefix = vec![0.0; kernel.len() + 1];
            for (i, &w) in kernel.iter().enumerate() {
                prefix[i + 1] = prefix[i] + w;
            }
            let total = prefix[kernel.len()];
            // Sample x takes index 0 for offsets k < -x, i.e. kernel[..r - x].
            let left_mass = (0..len)
                .map(|x| prefix[radius.saturating_sub(x)])
                .collect();
            // ... and index len - 1 for offsets k > len - 1 - x.
            let right_mass = (0..len)
                .map(|x| {
                    let first = radius + len - x;
                    total - prefix[first.min(kernel.len())]
                })
                .collect();
            forward.process(&mut g);
            // Symmetric real kernel: the spectrum is real.
            let spectrum = g.iter().map(|c| c.re / size as f64).collect();
            Strategy::Fft {
                size,
                forward,
                inverse,
                spectrum,
                left_mass,
                right_mass,
            }
        };
        Self {
            kernel,
            radius,
            len,
            strategy,
        }
    }

    fn padded(&self, src: &[f64], start: usize, step: usize, out: &mut Vec<f64>) {
        out.clear();
        let first = src[start];
        let last = src[start + (self.len - 1) * step];
        out.extend(std::iter::repeat_n(first, self.radius));
        out.extend((0..self.len).map(|i| src[start + i * step]));
        out.extend(std::iter::repeat_n(last, self.radius));
    }

    fn run(&self, src: &[f64], dst: &mut [f64], starts: &[usize], step: usize) {
        let mut pad_a = Vec::with_capacity(self.len + 2 * self.radius);
        match &self.strategy {
            Strategy::Direct => {
                for &start in starts {
                    self.padded(src, start, step, &mut pad_a);
                    for x in 0..self.len {
                        let window = &pad_a[x..x + self.kernel.len()];
                        let acc: f64 = window.iter().zip(self.kernel).map(|(v, w)| v * w).sum();
                        dst[start + x * step] = acc;
                    }
                }
            }
            Strategy::Fft {
                size,
                forward,
                inverse,
                spectrum,
                left_mass,
                right_mass,
            } => {
                let mut buf = vec![Complex::new(0.0, 0.0); *size];
                let mut scratch = vec![
                    Complex::new(0.0, 0.0);
                    forward
                        .get_inplace_scratch_len()
                        .max(inverse.get_inplace_scratch_len())
                ];
                let last = (self.len - 1) * step;
                for pair in starts.chunks(2) {
                    let a = pair[0];
                    let b = pair.get(1).copied();
                    for (i, slot) in buf.iter_mut().enumerate() {
                        *slot = if i < self.len {
                            let im = b.map_or(0.0, |b| src[b + i * step]);
                            Complex::new(src[a + i * step], im)
                        } else {
                            Complex::new(0.0, 0.0)
                        };
                    }
                    forward.process_with_scratch(&mut buf, &mut scratch);
                    for (c, &g) in buf.iter_mut().zip(spectrum) {
                        *c *= g;
                    }
                    inverse.process_with_scratch(&mut buf, &mut scratch);
                    let (a0, a1) = (src[a], src[a + last]);
                    for x in 0..self.len {
                        let edge = |first: f64, end: f64| first * left_mass[x] + end * right_mass[x];
                        dst[a + x * step] = buf[x].re + edge(a0, a1);
                        if let Some(b) = b {
                            dst[b + x * step] = buf[x].im + edge(src[b], src[b + last]);
                        }
                    }
                }
            }
        }
    }
}

impl GaussianBlur for ImageRgb {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self> {
        let data = blur_plane(self.data(), self.width(), self.height(), 3, sigma)?;
        ImageRgb::new(self.width(), self.height(), data)
    }
}

impl GaussianBlur for Mask {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self> {
        let data = blur_plane(self.data(), self.width(), self.height(), 1, sigma)?;
        Mask::new(self.width(), self.height(), data)
    }
}

impl GaussianBlur for DepthMap {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self> {
        let data = blur_plane(self.data(), self.width(), self.height(), 1, sigma)?;
        DepthMap::new(self.width(), self.height(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense 2-D convolution against an explicitly clamped source.
    fn dense_oracle(src: &[f32], w: usize, h: usize, sigma: f64) -> Vec<f64> {
        let r = (3.0 * sigma).ceil() as i64;
        let mut weights = Vec::new();
        let mut total = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let v = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                weights.push((dx, dy, v));
                total += v;
            }
        }
        let mut out = vec![0.0; w * h];
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let mut acc = 0.0;
                for &(dx, dy, v) in &weights {
                    let sx = (x + dx).clamp(0, w as i64 - 1) as usize;
                    let sy = (y + dy).clamp(0, h as i64 - 1) as usize;
                    acc += v * src[sy * w + sx] as f64;
                }
                out[y as usize * w + x as usize] = acc / total;
            }
        }
        out
    }

    #[test]
    fn zero_sigma_is_identity() {
        let m = Mask::from_fn(5, 4, |x, y| (x * 7 + y * 3) as f32 / 40.0);
        assert_eq!(m.gaussian_blur(0.0).unwrap(), m);
    }

    #[test]
    fn negative_sigma_rejected() {
        let m = Mask::filled(3, 3, 0.2);
        assert!(matches!(m.gaussian_blur(-1.0), Err(Error::NegativeSigma(_))));
    }

    #[test]
    fn constant_stays_constant() {
        for sigma in [0.7, 4.0, 15.0, 80.0] {
            let img = ImageRgb::filled(23, 17, 0.3);
            let out = img.gaussian_blur(sigma).unwrap();
            for v in out.data() {
                assert!((v - 0.3).abs() < 1e-7, "sigma {sigma}: {v}");
            }
        }
    }

    #[test]
    fn impulse_matches_dense_convolution() {
        let (w, h) = (21, 21);
        let mut data = vec![0.0f32; w * h];
        data[10 * w + 10] = 1.0;
        let m = Mask::new(w, h, data.clone()).unwrap();
        let out = m.gaussian_blur(1.5).unwrap();
        let oracle = dense_oracle(&data, w, h, 1.5);
        for (a, b) in out.data().iter().zip(&oracle) {
            assert!((*a as f64 - b).abs() < 1e-6);
        }
    }

    #[test]
    fn fft_path_matches_dense_convolution() {
        // radius 36 > DIRECT_MAX_RADIUS and wider than the plane
        let (w, h) = (19, 13);
        let data: Vec<f32> = (0..w * h).map(|i| ((i * 37) % 101) as f32 / 100.0).collect();
        let m = Mask::new(w, h, data.clone()).unwrap();
        let out = m.gaussian_blur(12.0).unwrap();
        let oracle = dense_oracle(&data, w, h, 12.0);
        for (a, b) in out.data().iter().zip(&oracle) {
            assert!((*a as f64 - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn rgb_channels_blur_independently() {
        let img = ImageRgb::from_fn(9, 9, |x, _| [x as f32 / 8.0, 0.5, 1.0 - x as f32 / 8.0]);
        let out = img.gaussian_blur(2.0).unwrap();
        for p in out.pixels() {
            assert!((p[1] - 0.5).abs() < 1e-7);
            assert!((p[0] + p[2] - 1.0).abs() < 1e-6);
        }
    }
}
