//! Deterministic separable image downscaling.
//!
//! The default kernel is Lanczos with a window of three lobes. When shrinking,
//! the kernel is stretched by the inverse of the axis ratio so it acts as a
//! low-pass filter, and the weights contributing to every output sample are
//! renormalized to sum to one. Edges are clamped. Arithmetic happens in `f64`
//! directly on the stored 8-bit values; the result is rounded half away from
//! zero and clamped to `[0, 255]`.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower bound on any scale that is a candidate IIS or a slider value.
pub const S_LB: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ResampleError {
    #[error("image dimensions must be at least 1x1 (got {width}x{height})")]
    ZeroDimension { width: u32, height: u32 },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    Channels(u8),
    #[error("sample buffer has {actual} values, expected {expected}")]
    SampleLength { expected: usize, actual: usize },
    #[error("scale {0} outside (0, 1]")]
    Scale(f64),
    #[error("lanczos window must be >= 2 (got {0})")]
    Window(u32),
    #[error("image i/o: {0}")]
    Io(#[from] image::ImageError),
}

/// An 8-bit raster with interleaved channels stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    id: String,
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<u8>,
}

impl Image {
    pub fn new(
        id: impl Into<String>,
        width: u32,
        height: u32,
        channels: u8,
        samples: Vec<u8>,
    ) -> Result<Self, ResampleError> {
        if width == 0 || height == 0 {
            return Err(ResampleError::ZeroDimension { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(ResampleError::Channels(channels));
        }
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(ResampleError::SampleLength {
                expected,
                actual: samples.len(),
            });
        }
        Ok(Self {
            id: id.into(),
            width,
            height,
            channels,
            samples,
        })
    }

    /// An image where every sample has the same value.
    pub fn filled(
        id: impl Into<String>,
        width: u32,
        height: u32,
        channels: u8,
        value: u8,
    ) -> Result<Self, ResampleError> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(id, width, height, channels, vec![value; len])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    #[inline]
    pub fn sample(&self, x: u32, y: u32, c: u8) -> u8 {
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize
            + c as usize;
        self.samples[idx]
    }

    /// Square crop of side `min(size, width, height)` around the image centre.
    pub fn center_crop(&self, size: u32) -> Image {
        let side_w = size.min(self.width).max(1);
        let side_h = size.min(self.height).max(1);
        let side = side_w.min(side_h);
        let x0 = (self.width - side) / 2;
        let y0 = (self.height - side) / 2;
        let c = self.channels as usize;
        let mut samples = Vec::with_capacity(side as usize * side as usize * c);
        for y in y0..y0 + side {
            let row = (y as usize * self.width as usize + x0 as usize) * c;
            samples.extend_from_slice(&self.samples[row..row + side as usize * c]);
        }
        Image {
            id: self.id.clone(),
            width: side,
            height: side,
            channels: self.channels,
            samples,
        }
    }

    /// Decodes a PNG (or any format the `image` crate recognises with the
    /// enabled features). Images with alpha lose it; 16-bit data is reduced to
    /// 8 bits.
    pub fn open(path: impl AsRef<Path>, id: impl Into<String>) -> Result<Self, ResampleError> {
        let decoded = image::open(path.as_ref())?;
        Ok(Self::from_dynamic(decoded, id))
    }

    pub fn decode_png(bytes: &[u8], id: impl Into<String>) -> Result<Self, ResampleError> {
        let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
        Ok(Self::from_dynamic(decoded, id))
    }

    fn from_dynamic(decoded: image::DynamicImage, id: impl Into<String>) -> Self {
        let id = id.into();
        if decoded.color().has_color() {
            let rgb = decoded.into_rgb8();
            let (w, h) = rgb.dimensions();
            Image {
                id,
                width: w,
                height: h,
                channels: 3,
                samples: rgb.into_raw(),
            }
        } else {
            let luma = decoded.into_luma8();
            let (w, h) = luma.dimensions();
            Image {
                id,
                width: w,
                height: h,
                channels: 1,
                samples: luma.into_raw(),
            }
        }
    }

    /// Lossless PNG encoding. Deterministic for identical samples.
    pub fn encode_png(&self) -> Result<Vec<u8>, ResampleError> {
        let mut out = Vec::new();
        let color = if self.channels == 3 {
            image::ExtendedColorType::Rgb8
        } else {
            image::ExtendedColorType::L8
        };
        let encoder = image::codecs::png::PngEncoder::new(&mut out);
        image::ImageEncoder::write_image(encoder, &self.samples, self.width, self.height, color)?;
        Ok(out)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ResampleError> {
        let bytes = self.encode_png()?;
        std::fs::write(path.as_ref(), bytes).map_err(|e| image::ImageError::IoError(e).into())
    }
}

/// A downscaling factor in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub const ONE: ScaleFactor = ScaleFactor(1.0);

    pub fn new(value: f64) -> Result<Self, ResampleError> {
        if value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(ResampleError::Scale(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True when the scale is usable as an IIS or slider value.
    pub fn is_above_lower_bound(self) -> bool {
        self.0 >= S_LB
    }
}

impl TryFrom<f64> for ScaleFactor {
    type Error = ResampleError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ScaleFactor> for f64 {
    fn from(s: ScaleFactor) -> f64 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Lanczos,
    Bilinear,
    Bicubic,
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelKind::Lanczos => "lanczos",
            KernelKind::Bilinear => "bilinear",
            KernelKind::Bicubic => "bicubic",
        })
    }
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lanczos" | "lanczos3" => Ok(KernelKind::Lanczos),
            "bilinear" | "linear" => Ok(KernelKind::Bilinear),
            "bicubic" | "cubic" => Ok(KernelKind::Bicubic),
            other => Err(format!("unknown kernel '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgePolicy {
    #[default]
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResampleSpec {
    pub kernel: KernelKind,
    pub lanczos_window: u32,
    #[serde(default)]
    pub edge_policy: EdgePolicy,
}

impl Default for ResampleSpec {
    fn default() -> Self {
        Self::lanczos(3)
    }
}

impl ResampleSpec {
    pub fn lanczos(window: u32) -> Self {
        Self {
            kernel: KernelKind::Lanczos,
            lanczos_window: window,
            edge_policy: EdgePolicy::Clamp,
        }
    }

    pub fn with_kernel(kernel: KernelKind) -> Self {
        Self {
            kernel,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ResampleError> {
        if self.lanczos_window < 2 {
            return Err(ResampleError::Window(self.lanczos_window));
        }
        Ok(())
    }

    /// Half-width of the unscaled kernel in source pixels.
    pub fn support(&self) -> f64 {
        match self.kernel {
            KernelKind::Lanczos => self.lanczos_window as f64,
            KernelKind::Bilinear => 1.0,
            KernelKind::Bicubic => 2.0,
        }
    }

    /// Evaluates the unscaled kernel at offset `x`.
    pub fn weight(&self, x: f64) -> f64 {
        match self.kernel {
            KernelKind::Lanczos => kernel_value(x, self.lanczos_window),
            KernelKind::Bilinear => (1.0 - x.abs()).max(0.0),
            KernelKind::Bicubic => keys_cubic(x),
        }
    }

    /// Short tag used in manifests and cache keys, e.g. `lanczos3`.
    pub fn tag(&self) -> String {
        match self.kernel {
            KernelKind::Lanczos => format!("lanczos{}", self.lanczos_window),
            k => k.to_string(),
        }
    }
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Lanczos kernel `sinc(x) * sinc(x / a)` on `|x| < a`, zero elsewhere.
pub fn kernel_value(x: f64, a: u32) -> f64 {
    let a = a as f64;
    if x == 0.0 {
        1.0
    } else if x.abs() < a {
        sinc(x) * sinc(x / a)
    } else {
        0.0
    }
}

// Keys cubic convolution with a = -0.5 (Catmull-Rom).
fn keys_cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x < 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// `max(1, round_half_up(len * s))`.
pub fn scaled_len(len: u32, s: f64) -> u32 {
    let v = (len as f64 * s + 0.5).floor();
    (v as u32).max(1)
}

/// Normalized taps for one output sample along one axis.
#[derive(Debug, Clone)]
struct Taps {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

fn axis_taps(in_len: u32, out_len: u32, spec: &ResampleSpec) -> Vec<Taps> {
    let ratio = out_len as f64 / in_len as f64;
    let stretch = (1.0 / ratio).max(1.0);
    let support = spec.support() * stretch;
    let last = in_len as i64 - 1;
    (0..out_len)
        .map(|o| {
            let center = (o as f64 + 0.5) / ratio;
            let lo = (center - support).floor() as i64;
            let hi = (center + support).ceil() as i64;
            let mut indices: Vec<usize> = Vec::new();
            let mut weights: Vec<f64> = Vec::new();
            for i in lo..=hi {
                let w = spec.weight((i as f64 + 0.5 - center) / stretch);
                if w == 0.0 {
                    continue;
                }
                let idx = i.clamp(0, last) as usize;
                match indices.last() {
                    Some(&prev) if prev == idx => *weights.last_mut().unwrap() += w,
                    _ => {
                        indices.push(idx);
                        weights.push(w);
                    }
                }
            }
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            Taps { indices, weights }
        })
        .collect()
}

#[inline]
fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Downscales `image` by `s` on both axes.
///
/// `s == 1` returns a sample-identical copy.
pub fn downscale(image: &Image, s: ScaleFactor, spec: &ResampleSpec) -> Result<Image, ResampleError> {
    spec.validate()?;
    if image.width == 0 || image.height == 0 {
        return Err(ResampleError::ZeroDimension {
            width: image.width,
            height: image.height,
        });
    }
    let s = s.value();
    if s == 1.0 {
        return Ok(image.clone());
    }
    let out_w = scaled_len(image.width, s);
    let out_h = scaled_len(image.height, s);
    Ok(resize_to(image, out_w, out_h, spec))
}

/// Resizes to explicit output dimensions (each no larger than the input).
pub fn resize_to(image: &Image, out_w: u32, out_h: u32, spec: &ResampleSpec) -> Image {
    if out_w == image.width && out_h == image.height {
        return image.clone();
    }
    let c = image.channels as usize;
    let in_w = image.width as usize;
    let in_h = image.height as usize;
    let xt = axis_taps(image.width, out_w, spec);
    let yt = axis_taps(image.height, out_h, spec);

    // Horizontal pass, kept in f64 so the two passes compose without rounding.
    let row_len = out_w as usize * c;
    let mut mid = vec![0.0f64; row_len * in_h];
    mid.par_chunks_mut(row_len).enumerate().for_each(|(y, row)| {
        let src = &image.samples[y * in_w * c..(y + 1) * in_w * c];
        for (ox, taps) in xt.iter().enumerate() {
            for ch in 0..c {
                let mut acc = 0.0;
                for (&ix, &w) in taps.indices.iter().zip(&taps.weights) {
                    acc += w * src[ix * c + ch] as f64;
                }
                row[ox * c + ch] = acc;
            }
        }
    });

    let mut out = vec![0u8; row_len * out_h as usize];
    out.par_chunks_mut(row_len).enumerate().for_each(|(oy, row)| {
        let taps = &yt[oy];
        for i in 0..row_len {
            let mut acc = 0.0;
            for (&iy, &w) in taps.indices.iter().zip(&taps.weights) {
                acc += w * mid[iy * row_len + i];
            }
            row[i] = to_u8(acc);
        }
    });

    Image {
        id: image.id.clone(),
        width: out_w,
        height: out_h,
        channels: image.channels,
        samples: out,
    }
}
