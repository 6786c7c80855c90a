//! Reference implementations written from the definitions, used to check
//! the library. Kept deliberately naive.
#![allow(dead_code)]

use std::f64::consts::PI;

use iisa::stats::Opinion;
use iisa::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn lanczos(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.abs() >= a {
        return 0.0;
    }
    let px = PI * x;
    (px.sin() / px) * ((px / a).sin() / (px / a))
}

/// Non-separable 2D windowed-sinc resampling to `round(len * s)`, evaluated
/// over every source tap with clamped coordinates and no intermediate rounding.
pub fn lanczos_2d(img: &Image, s: f64, a: u32) -> Vec<f64> {
    let a = a as f64;
    let (w, h, c) = (img.width() as i64, img.height() as i64, img.channels() as usize);
    let ow = ((w as f64 * s) + 0.5).floor().max(1.0) as i64;
    let oh = ((h as f64 * s) + 0.5).floor().max(1.0) as i64;
    let rx = ow as f64 / w as f64;
    let ry = oh as f64 / h as f64;
    let sx = (1.0 / rx).max(1.0);
    let sy = (1.0 / ry).max(1.0);
    let mut out = Vec::with_capacity((ow * oh) as usize * c);
    for oy in 0..oh {
        let cy = (oy as f64 + 0.5) / ry;
        for ox in 0..ow {
            let cx = (ox as f64 + 0.5) / rx;
            for ch in 0..c {
                let (mut acc, mut norm) = (0.0, 0.0);
                let ylo = (cy - a * sy).floor() as i64;
                let yhi = (cy + a * sy).ceil() as i64;
                let xlo = (cx - a * sx).floor() as i64;
                let xhi = (cx + a * sx).ceil() as i64;
                for iy in ylo..=yhi {
                    let wy = lanczos((iy as f64 + 0.5 - cy) / sy, a);
                    for ix in xlo..=xhi {
                        let wx = lanczos((ix as f64 + 0.5 - cx) / sx, a);
                        let v = img.sample(ix.clamp(0, w - 1) as u32, iy.clamp(0, h - 1) as u32, ch as u8);
                        acc += wx * wy * v as f64;
                        norm += wx * wy;
                    }
                }
                out.push(acc / norm);
            }
        }
    }
    out
}

pub fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32, channels: u8) -> Image {
    let n = (w * h * channels as u32) as usize;
    let samples: Vec<u8> = (0..n).map(|_| rng.random()).collect();
    Image::new("r", w, h, channels, samples).unwrap()
}

pub fn geo_mean(x: &[f64]) -> f64 {
    (x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64).exp()
}

/// Rank = 1 + (#smaller) + (#equal - 1) / 2.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let eq = x.iter().filter(|&&u| u == v).count() as f64;
            1.0 + less + (eq - 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / vx.sqrt() / vy.sqrt())
    }
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

pub fn rmse(x: &[f64], y: &[f64]) -> f64 {
    (x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn mae(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64
}

fn interp(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() as f64 - 1.0);
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] * (1.0 - (pos - i as f64)) + sorted[j] * (pos - i as f64)
}

/// Bootstrap half-width under the shared draw specification: one ChaCha8
/// stream, indices from `random_range(0..n)`, linear-interpolated percentiles.
pub fn bootstrap_half_width(opinions: &[f64], n_resamples: usize, size: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..n_resamples)
        .map(|_| {
            let draw: Vec<f64> = (0..size).map(|_| opinions[rng.random_range(0..opinions.len())]).collect();
            geo_mean(&draw)
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (interp(&means, 0.975) - interp(&means, 0.025)) / 2.0
}

/// Valley test by exhaustive search over (left, mid, right) index triples.
pub fn has_valley(q: &[f64]) -> bool {
    for m in 1..q.len() - 1 {
        let left = (0..m).any(|l| q[l] > q[m]);
        let right = (m + 1..q.len()).any(|r| q[r] > q[m]);
        if left && right {
            return true;
        }
    }
    false
}

/// Concavity violation fraction under the shared draw order: pools visited
/// in order, each redrawn with replacement to its own size.
pub fn violation_fraction(pools: &[Vec<f64>], n_resamples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..n_resamples {
        let means: Vec<f64> = pools
            .iter()
            .map(|p| (0..p.len()).map(|_| p[rng.random_range(0..p.len())]).sum::<f64>() / p.len() as f64)
            .collect();
        if has_valley(&means) {
            hits += 1;
        }
    }
    hits as f64 / n_resamples as f64
}

/// Synthetic annotators: a true IIS per image, log-uniform on [0.06, 0.8],
/// and independent log-normal noise per opinion, clamped to [0.05, 1].
pub struct SyntheticPanel {
    pub truth: Vec<f64>,
    pub sigma: f64,
}

impl SyntheticPanel {
    pub fn new(n_images: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Self {
        let (lo, hi) = (0.06f64.ln(), 0.8f64.ln());
        let truth = (0..n_images).map(|_| rng.random_range(lo..hi).exp()).collect();
        Self { truth, sigma }
    }

    pub fn rate(&self, image: usize, rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller.
        let u1: f64 = rng.random_range(f64::EPSILON..1.0);
        let u2: f64 = rng.random();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
        (self.truth[image] * (self.sigma * z).exp()).clamp(0.05, 1.0)
    }

    pub fn image_id(i: usize) -> String {
        format!("img{i:03}")
    }

    /// Two repetitions per annotator per image.
    pub fn opinions(&self, n_annotators: usize, rng: &mut ChaCha8Rng) -> Vec<Opinion> {
        let mut out = Vec::new();
        for p in 0..n_annotators {
            for img in 0..self.truth.len() {
                for rep in 1..=2u8 {
                    out.push(Opinion {
                        study_id: "synthetic".into(),
                        participant_id: format!("p{p:02}"),
                        image_id: Self::image_id(img),
                        batch_id: 0,
                        repetition: rep,
                        scale_value: self.rate(img, rng),
                        slider_position: 0,
                        submitted_at: 0,
                        duration_ms: 0,
                        generation: 0,
                    });
                }
            }
        }
        out
    }
}
