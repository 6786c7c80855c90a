//! Repeated random splits and median-of-splits scoring of a predictor.
//!
//! cargo run -p iisa --example splits_eval

use iisa::evalhub::{evaluate, make_splits, PredictionTable, SplitSpec};
use iisa::seed::rng_from_seed;
use iisa::stats::MoisRecord;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rng_from_seed(5);
    let gt: Vec<MoisRecord> = (0..60)
        .map(|i| MoisRecord {
            image_id: format!("img{i:02}"),
            mois: rng.random_range(0.06..0.8),
            ci95: 0.05,
            n_opinions: 20,
        })
        .collect();
    let ids: Vec<String> = gt.iter().map(|r| r.image_id.clone()).collect();
    let splits = make_splits(&ids, &SplitSpec::with_seed(0))?;
    println!("{} splits of {}/{}/{}", splits.len(), splits[0].train.len(), splits[0].val.len(), splits[0].test.len());

    // A predictor that is right up to multiplicative noise.
    let mut pred = PredictionTable::default();
    for r in &gt {
        pred.insert(&r.image_id, (r.mois * rng.random_range(0.8..1.25)).clamp(0.05, 1.0));
    }
    let report = evaluate(&pred, &gt, &splits)?;
    for (i, m) in report.per_split.iter().enumerate() {
        println!("split {i}: srcc {:.3} plcc {:.3} rmse {:.4} mae {:.4}", m.srcc.unwrap_or(f64::NAN), m.plcc.unwrap_or(f64::NAN), m.rmse, m.mae);
    }
    let m = report.median;
    println!("median : srcc {:.3} plcc {:.3} rmse {:.4} mae {:.4}", m.srcc.unwrap_or(f64::NAN), m.plcc.unwrap_or(f64::NAN), m.rmse, m.mae);
    Ok(())
}
