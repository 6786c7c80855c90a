use std::collections::BTreeMap;

use super::{bootstrap_ci, geometric_mean, BootstrapSpec, MoisRecord, Opinion, StatsError};
use crate::seed::derive_seed;

/// Opinions grouped by image id, in the order they appear.
pub fn opinions_by_image<'a>(opinions: impl IntoIterator<Item = &'a Opinion>) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for o in opinions {
        out.entry(o.image_id.clone()).or_default().push(o.scale_value);
    }
    out
}

/// MOIS and bootstrap half-width for one image. The bootstrap stream is
/// derived from `(seed, image_id)`; resamples hold `min(20, n)` opinions.
pub fn mois_record(image_id: &str, values: &[f64], seed: u64, n_resamples: usize) -> Result<MoisRecord, StatsError> {
    let spec = BootstrapSpec {
        n_resamples,
        resample_size: values.len().min(20),
        seed: derive_seed(seed, &["mois", image_id]),
    };
    Ok(MoisRecord {
        image_id: image_id.to_string(),
        mois: geometric_mean(values)?,
        ci95: bootstrap_ci(values, spec)?,
        n_opinions: values.len(),
    })
}

/// [`mois_record`] for every image, ordered by id.
pub fn aggregate_mois(
    by_image: &BTreeMap<String, Vec<f64>>,
    seed: u64,
    n_resamples: usize,
) -> Result<Vec<MoisRecord>, StatsError> {
    by_image
        .iter()
        .map(|(id, v)| mois_record(id, v, seed, n_resamples))
        .collect()
}
