//! Float image containers, PNG/JPEG I/O and bilinear resampling.
//!
//! Every plane is row-major `f32`. RGB data is interleaved, so a pixel at
//! `(x, y)` lives at `3 * (y * width + x)`.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};

use crate::error::{Error, Result};

/// Interleaved RGB image with samples nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

macro_rules! single_channel {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            width: usize,
            height: usize,
            data: Vec<f32>,
        }

        impl $name {
            pub fn new(width: usize, height: usize, data: Vec<f32>) -> $crate::error::Result<Self> {
                $crate::image::check_len(width, height, 1, data.len())?;
                Ok(Self { width, height, data })
            }

            pub fn filled(width: usize, height: usize, value: f32) -> Self {
                Self { width, height, data: vec![value; width * height] }
            }

            pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
                let mut data = Vec::with_capacity(width * height);
                for y in 0..height {
                    for x in 0..width {
                        data.push(f(x, y));
                    }
                }
                Self { width, height, data }
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.width, self.height)
            }

            pub fn data(&self) -> &[f32] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [f32] {
                &mut self.data
            }

            pub fn into_data(self) -> Vec<f32> {
                self.data
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> f32 {
                self.data[y * self.width + x]
            }

            pub fn resize(&self, width: usize, height: usize) -> $crate::error::Result<Self> {
                let data = $crate::image::resize_plane(&self.data, self.width, self.height, 1, width, height)?;
                Ok(Self { width, height, data })
            }

            pub fn mean(&self) -> f64 {
                self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len().max(1) as f64
            }
        }
    };
}

pub(crate) use single_channel;

single_channel!(
    /// Subject mask, 1 = subject.
    Mask
);
single_channel!(
    /// Relative (inverse) depth, min-max normalized to `[0, 1]` by the producer.
    DepthMap
);

pub(crate) fn check_len(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(width, height));
    }
    if len != width * height * channels {
        return Err(Error::DimensionMismatch {
            expected: (width * height * channels, 1),
            actual: (len, 1),
        });
    }
    Ok(())
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, 3, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height * 3],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(3)
    }

    /// Extracts one channel as a standalone plane.
    pub fn channel(&self, c: usize) -> Vec<f32> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    pub fn from_channels(width: usize, height: usize, channels: [&[f32]; 3]) -> Result<Self> {
        for ch in channels {
            check_len(width, height, 1, ch.len())?;
        }
        let [r, g, b] = channels;
        let data = r
            .iter()
            .zip(g)
            .zip(b)
            .flat_map(|((&r, &g), &b)| [r, g, b])
            .collect();
        Ok(Self { width, height, data })
    }

    pub fn clamp01(mut self) -> Self {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rec. 601 luma per pixel.
    pub fn luma(&self) -> Vec<f64> {
        self.pixels()
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    }

    pub fn resize(&self, width: usize, height: usize) -> Result<Self> {
        let data = resize_plane(&self.data, self.width, self.height, 3, width, height)?;
        Ok(Self { width, height, data })
    }
}

/// Bilinear resampling with pixel-center alignment and clamp-to-edge.
///
/// Identical target dimensions reproduce the input bit for bit, and constant
/// planes stay exactly constant.
pub(crate) fn resize_plane(
    src: &[f32],
    sw: usize,
    sh: usize,
    channels: usize,
    dw: usize,
    dh: usize,
) -> Result<Vec<f32>> {
    if dw == 0 || dh == 0 {
        return Err(Error::InvalidDimensions(dw, dh));
    }
    let taps = |dst: usize, src_len: usize| -> Vec<(usize, usize, f32)> {
        let scale = src_len as f64 / dst as f64;
        (0..dst)
            .map(|i| {
                let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
                let i0 = pos.floor() as usize;
                let i1 = (i0 + 1).min(src_len - 1);
                (i0, i1, (pos - i0 as f64) as f32)
            })
            .collect()
    };
    let xs = taps(dw, sw);
    let ys = taps(dh, sh);
    let lerp = |a: f32, b: f32, t: f32| a + (b - a) * t;

    let mut out = Vec::with_capacity(dw * dh * channels);
    for &(y0, y1, ty) in &ys {
        let row0 = &src[y0 * sw * channels..(y0 + 1) * sw * channels];
        let row1 = &src[y1 * sw * channels..(y1 + 1) * sw * channels];
        for &(x0, x1, tx) in &xs {
            for c in 0..channels {
                let top = lerp(row0[x0 * channels + c], row0[x1 * channels + c], tx);
                let bottom = lerp(row1[x0 * channels + c], row1[x1 * channels + c], tx);
                out.push(lerp(top, bottom, ty));
            }
        }
    }
    Ok(out)
}

fn open_dynamic(path: &Path) -> Result<DynamicImage> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)?
        .with_guessed_format()
        .map_err(|e| Error::CorruptImage {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: "unrecognized file signature".into(),
        });
    }
    reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            detail: u.to_string(),
        },
        other => Error::CorruptImage {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    })
}

fn is_16bit(img: &DynamicImage) -> bool {
    matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    )
}

/// Loads an 8/16-bit PNG or a JPEG as RGB in `[0, 1]`. Grayscale is replicated.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageRgb> {
    let dynamic = open_dynamic(path.as_ref())?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let data = if is_16bit(&dynamic) {
        dynamic
            .to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 65535.0)
            .collect()
    } else {
        dynamic
            .to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 255.0)
            .collect()
    };
    ImageRgb::new(w, h, data)
}

fn load_gray(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let dynamic = open_dynamic(path)?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let data = if is_16bit(&dynamic) {
        dynamic
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 65535.0)
            .collect()
    } else {
        dynamic
            .to_luma8()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 255.0)
            .collect()
    };
    Ok((w, h, data))
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let (w, h, data) = load_gray(path.as_ref())?;
    Mask::new(w, h, data)
}

pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    let (w, h, data) = load_gray(path.as_ref())?;
    DepthMap::new(w, h, data)
}

/// Quantizes `[0, 1]` to a byte, rounding half up.
#[inline]
pub fn to_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) as f64 * 255.0 + 0.5).floor() as u8
}

fn write_err(path: &Path, e: impl ToString) -> Error {
    Error::Write {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

/// Encodes to 8-bit RGB PNG bytes.
pub fn encode_png(img: &ImageRgb) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = img.data.iter().map(|&v| to_byte(v)).collect();
    let buf = RgbImage::from_raw(img.width as u32, img.height as u32, bytes)
        .expect("buffer length matches dimensions");
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| write_err(Path::new("<memory>"), e))?;
    Ok(out.into_inner())
}

pub fn save_image(img: &ImageRgb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| write_err(path, e))
}

/// Writes a single-channel plane as an 8-bit grayscale PNG.
pub fn save_gray(width: usize, height: usize, data: &[f32], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = data.iter().map(|&v| to_byte(v)).collect();
    let buf = GrayImage::from_raw(width as u32, height as u32, bytes)
        .ok_or_else(|| write_err(path, "buffer length does not match dimensions"))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| write_err(path, e))
}

/// Writes a depth plane as a 16-bit grayscale PNG.
pub fn save_depth(depth: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let words: Vec<u16> = depth
        .data
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) as f64 * 65535.0).round() as u16)
        .collect();
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
        depth.width as u32,
        depth.height as u32,
        words,
    )
    .ok_or_else(|| write_err(path, "buffer length does not match dimensions"))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| write_err(path, e))
}
