//! Agreement between disjoint annotator groups as the group size grows.
//!
//! cargo run -p iisa --example agreement

use iisa::seed::rng_from_seed;
use iisa::stats::{intergroup_agreement, AgreementConfig, Opinion};
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rng_from_seed(8);
    let truth: Vec<f64> = (0..40).map(|_| rng.random_range(0.06..0.8)).collect();
    let mut opinions = Vec::new();
    for p in 0..12 {
        for (i, t) in truth.iter().enumerate() {
            for repetition in 1..=2 {
                let noise: f64 = rng.random_range(-0.6..0.6);
                opinions.push(Opinion {
                    study_id: "sim".into(),
                    participant_id: format!("p{p:02}"),
                    image_id: format!("img{i:02}"),
                    batch_id: 0,
                    repetition,
                    scale_value: (t * noise.exp()).clamp(0.05, 1.0),
                    slider_position: 0,
                    submitted_at: 0,
                    duration_ms: 0,
                    generation: 0,
                });
            }
        }
    }
    println!("group  srcc mean (sd)      rmsd mean (sd)");
    for g in 1..=6 {
        let r = intergroup_agreement(&opinions, &AgreementConfig::new(g, 1))?;
        println!("{g:<6} {:.3} ({:.3})     {:.3} ({:.3})", r.srcc.mean, r.srcc.sd, r.rmsd.mean, r.rmsd.sd);
    }
    Ok(())
}
