//! Synthetic validation pools with prescribed concept prevalence.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mue::mix_seed;
use crate::pool::Dataset;

/// Builds a `n_samples × prevalence.len()` pool where concept `c` is positive
/// on exactly `round(prevalence[c] · n_samples)` randomly placed samples.
///
/// Sample ids are `s0000, s0001, …`; concept ids `c00, c01, …`.
pub fn generate_dataset(n_samples: usize, prevalence: &[f64], seed: u64) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
    }
    if prevalence.is_empty() {
        return Err(Error::InvalidConfig("at least one concept is required".into()));
    }
    if let Some(p) = prevalence.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidConfig(format!("prevalence must lie in [0, 1], got {p}")));
    }
    let n_concepts = prevalence.len();
    let mut labels = vec![false; n_samples * n_concepts];
    let mut order: Vec<usize> = (0..n_samples).collect();
    for (c, p) in prevalence.iter().enumerate() {
        let positives = libm::round(p * n_samples as f64) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, c as u64));
        order.sort_unstable();
        order.shuffle(&mut rng);
        for &s in &order[..positives.min(n_samples)] {
            labels[s * n_concepts + c] = true;
        }
    }
    let samples: Vec<String> = (0..n_samples).map(|i| format!("s{i:04}")).collect();
    let concepts: Vec<String> = (0..n_concepts).map(|c| format!("c{c:02}")).collect();
    Dataset::new(samples, concepts, labels)
}

/// Geometrically decaying prevalence from `most` down to `least`, for skewed
/// pools where one concept dominates and the tail is rare.
pub fn skewed_prevalence(n_concepts: usize, most: f64, least: f64) -> Vec<f64> {
    if n_concepts == 1 {
        return vec![most];
    }
    let ratio = libm::pow(least / most, 1.0 / (n_concepts - 1) as f64);
    (0..n_concepts)
        .map(|c| most * libm::pow(ratio, c as f64))
        .collect()
}
