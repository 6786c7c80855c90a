//! Zero-shot IIS: score an image at many scales with a quality measure and
//! report the scale where quality peaks.
//!
//! The toy measure here rewards detail (mean absolute horizontal gradient)
//! and penalizes softness from resampling, so upscaled-looking images peak
//! below 1. Any executable that prints a score can be plugged in instead
//! through `CommandOracle`.
//!
//! cargo run -p iisa --example zero_shot

use iisa::evalhub::{predict_multiscale, FnOracle};
use iisa::resample::{downscale, Image, ResampleSpec, ScaleFactor};

/// A sharp pattern blown up by `blow_up` with pixel repetition.
fn blocky(blow_up: u32) -> Image {
    let base = 60u32;
    let n = base * blow_up;
    let mut px = Vec::with_capacity((n * n) as usize);
    for y in 0..n {
        for x in 0..n {
            let (bx, by) = (x / blow_up, y / blow_up);
            px.push(if (bx * 7 + by * 3) % 5 < 2 { 230 } else { 20 });
        }
    }
    Image::new(format!("x{blow_up}"), n, n, 1, px).unwrap()
}

fn sharpness(img: &Image) -> f64 {
    let (w, h) = (img.width(), img.height());
    if w < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for y in 0..h {
        for x in 1..w {
            total += (img.sample(x, y, 0) as f64 - img.sample(x - 1, y, 0) as f64).abs();
        }
    }
    total / ((w - 1) * h) as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ResampleSpec::default();
    for blow_up in [1, 2, 4] {
        let img = blocky(blow_up);
        let oracle = FnOracle(|_: &str, s: f64| {
            sharpness(&downscale(&img, ScaleFactor::new(s).expect("grid scale"), &spec).expect("downscale"))
        });
        println!("{}: predicted IIS {:.3}", img.id(), predict_multiscale(img.id(), &oracle, 20)?);
    }
    Ok(())
}
