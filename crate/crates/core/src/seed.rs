//! Seed derivation for reproducible, order-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used for every randomized procedure in the crate.
pub type StudyRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> StudyRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from a parent seed and a list of labels.
///
/// Stable across platforms and releases: SHA-256 over the little-endian
/// parent seed followed by each label with a length prefix.
pub fn derive_seed(seed: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for label in labels {
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
    }
    let digest = h.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

pub fn derived_rng(seed: u64, labels: &[&str]) -> StudyRng {
    rng_from_seed(derive_seed(seed, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_label_sensitive() {
        assert_eq!(derive_seed(7, &["a"]), derive_seed(7, &["a"]));
        assert_ne!(derive_seed(7, &["a"]), derive_seed(8, &["a"]));
        assert_ne!(derive_seed(7, &["ab"]), derive_seed(7, &["a", "b"]));
    }
}
