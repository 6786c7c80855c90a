//! Classifies a quality-vs-scale triplet and estimates how often the
//! classification flips under resampling of the underlying ratings.
//!
//! cargo run -p iisa --example concavity

use iisa::seed::rng_from_seed;
use iisa::stats::{check_concavity, concavity_violation_probability, RatingPool};
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scales = [0.25, 0.5, 1.0];
    for mos in [[0.4, 0.7, 0.55], [0.7, 0.4, 0.55], [0.3, 0.5, 0.8]] {
        let pts: Vec<(f64, f64)> = scales.iter().copied().zip(mos).collect();
        println!("{mos:?}: {:?}", check_concavity(&pts)?);
    }

    let mut rng = rng_from_seed(4);
    for spread in [0.02f64, 0.1, 0.3] {
        let pools: Vec<RatingPool> = scales
            .iter()
            .zip([0.5, 0.62, 0.58])
            .map(|(&scale, m)| RatingPool {
                scale,
                ratings: (0..15).map(|_| (m + rng.random_range(-spread..spread)).clamp(0.0, 1.0)).collect(),
            })
            .collect();
        let p = concavity_violation_probability(&pools, 1000, 9)?;
        println!("rating spread {spread}: violation probability {p:.3}");
    }
    Ok(())
}
