mod common;

use iisa::resample::{downscale, Image, KernelKind, ResampleSpec, ScaleFactor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_diff(out: &Image, oracle: &[f64]) -> f64 {
    out.samples()
        .iter()
        .zip(oracle)
        .map(|(&a, &b)| (a as f64 - b.round().clamp(0.0, 255.0)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn gradient_matches_2d_oracle() {
    let samples: Vec<u8> = (0..8).flat_map(|y| (0..8).map(move |x| (x * 32 + y * 3) as u8)).collect();
    let img = Image::new("g", 8, 8, 1, samples).unwrap();
    let out = downscale(&img, ScaleFactor::new(0.5).unwrap(), &ResampleSpec::default()).unwrap();
    assert_eq!((out.width(), out.height()), (4, 4));
    assert!(max_diff(&out, &common::lanczos_2d(&img, 0.5, 3)) <= 1.0);
}

#[test]
fn random_images_match_2d_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let img = common::random_image(&mut rng, 16, 16, 3);
        for s in [0.25, 0.5, 0.75] {
            let out = downscale(&img, ScaleFactor::new(s).unwrap(), &ResampleSpec::default()).unwrap();
            let oracle = common::lanczos_2d(&img, s, 3);
            assert_eq!(out.samples().len(), oracle.len());
            let d = max_diff(&out, &oracle);
            assert!(d <= 1.0, "scale {s}: diff {d}");
        }
    }
}

#[test]
fn non_square_and_odd_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let img = common::random_image(&mut rng, 23, 9, 1);
    for s in [0.31, 0.6, 0.9] {
        let out = downscale(&img, ScaleFactor::new(s).unwrap(), &ResampleSpec::default()).unwrap();
        assert!(max_diff(&out, &common::lanczos_2d(&img, s, 3)) <= 1.0);
    }
}

#[test]
fn constants_preserved_by_every_kernel() {
    for kernel in [KernelKind::Lanczos, KernelKind::Bilinear, KernelKind::Bicubic] {
        let img = Image::filled("c", 33, 20, 3, 201).unwrap();
        for s in [0.05, 0.2, 0.5, 0.77] {
            let out = downscale(&img, ScaleFactor::new(s).unwrap(), &ResampleSpec::with_kernel(kernel)).unwrap();
            assert!(out.samples().iter().all(|&v| v == 201), "{kernel} at {s}");
        }
    }
}

#[test]
fn identity_at_one_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = common::random_image(&mut rng, 16, 16, 3);
    let same = downscale(&img, ScaleFactor::ONE, &ResampleSpec::default()).unwrap();
    assert_eq!(same.samples(), img.samples());
    let a = downscale(&img, ScaleFactor::new(0.35).unwrap(), &ResampleSpec::default()).unwrap();
    let b = downscale(&img, ScaleFactor::new(0.35).unwrap(), &ResampleSpec::default()).unwrap();
    assert_eq!(a.encode_png().unwrap(), b.encode_png().unwrap());
}
