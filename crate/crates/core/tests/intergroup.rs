mod common;

use iisa::stats::{intergroup_agreement, AgreementConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn agreement_rises_with_group_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let panel = common::SyntheticPanel::new(50, 0.5, &mut rng);
    let opinions = panel.opinions(10, &mut rng);
    let means: Vec<f64> = (1..=5)
        .map(|g| intergroup_agreement(&opinions, &AgreementConfig::new(g, 5)).unwrap())
        .map(|r| {
            assert_eq!(r.n_pairs, 200);
            r.srcc.mean
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
}

#[test]
fn agreement_is_seed_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let panel = common::SyntheticPanel::new(20, 0.4, &mut rng);
    let opinions = panel.opinions(6, &mut rng);
    let a = intergroup_agreement(&opinions, &AgreementConfig::new(2, 9)).unwrap();
    let b = intergroup_agreement(&opinions, &AgreementConfig::new(2, 9)).unwrap();
    assert_eq!(a, b);
}
