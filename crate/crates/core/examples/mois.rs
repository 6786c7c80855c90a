//! Aggregates simulated opinions into MOIS with bootstrap intervals.
//!
//! cargo run -p iisa --example mois

use std::collections::BTreeMap;

use iisa::seed::rng_from_seed;
use iisa::stats::{aggregate_mois, bootstrap_ci, geometric_mean, BootstrapSpec};
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rng_from_seed(3);
    let mut by_image: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, truth) in [0.12, 0.3, 0.55, 0.9].into_iter().enumerate() {
        // Multiplicative noise: opinions spread evenly in log scale.
        let ops = (0..24)
            .map(|_| (truth * rng.random_range(-0.3f64..0.3).exp()).clamp(0.05, 1.0))
            .collect();
        by_image.insert(format!("img{i}"), ops);
    }
    println!("image  mois    ci95    n");
    for r in aggregate_mois(&by_image, 11, 100)? {
        println!("{:<6} {:.4}  {:.4}  {}", r.image_id, r.mois, r.ci95, r.n_opinions);
    }

    let flat = vec![0.5; 20];
    let spec = BootstrapSpec { n_resamples: 100, resample_size: 20, seed: 1 };
    println!("constant opinions: mean {} ci95 {}", geometric_mean(&flat)?, bootstrap_ci(&flat, spec)?);
    Ok(())
}
