//! Leverage of resolution over perceived quality.
//!
//! cargo run -p iisa --example sensitivity

use iisa::stats::{leverage, sensitivity_table, SensitivityPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = leverage(0.25, 0.05)?;
    println!("dS {} dQ {} -> gamma {}", r.delta_s, r.delta_q, r.gamma);

    let pairs = vec![
        SensitivityPair { mos_hi: 0.62, mos_lo: 0.58, delta_s: 0.25 },
        SensitivityPair { mos_hi: 0.55, mos_lo: 0.50, delta_s: 0.25 },
        SensitivityPair { mos_hi: 0.60, mos_lo: 0.49, delta_s: 0.5 },
        SensitivityPair { mos_hi: 0.52, mos_lo: 0.45, delta_s: 0.5 },
        // Above the cutoff, ignored.
        SensitivityPair { mos_hi: 0.95, mos_lo: 0.40, delta_s: 0.5 },
    ];
    println!("delta_s  delta_q  gamma  pairs");
    for r in sensitivity_table(&pairs, 0.9) {
        println!("{:<8} {:<8.4} {:<6.2} {}", r.delta_s, r.delta_q, r.gamma, r.n_pairs);
    }
    Ok(())
}
