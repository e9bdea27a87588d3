//! Seeded random streams and the Gumbel-top-k sampler shared by pool
//! construction and song selection.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Generator used for every simulation stream.
pub type SimRng = ChaCha20Rng;

/// Recorded in output manifests so a run can be matched to its stream.
pub const RNG_ALGORITHM: &str = "ChaCha20Rng (rand_chacha 0.9, seed_from_u64)";

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Standard Gumbel(0, 1) draw.
pub fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -(-u.ln()).ln()
}

/// Samples `k` distinct indices without replacement, where successive draws
/// follow the renormalized softmax of `logits` (Plackett-Luce).
///
/// Exactly one Gumbel draw is consumed per logit, in index order, so the
/// number of random draws depends only on `logits.len()`. Indices with a
/// logit of `-inf` are never chosen unless `k` exceeds the finite count.
pub fn gumbel_top_k<R: Rng + ?Sized>(logits: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let k = k.min(logits.len());
    let max = logits
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = if max.is_finite() { max } else { 0.0 };
    let mut keyed: Vec<(f64, usize)> = logits
        .iter()
        .enumerate()
        .map(|(i, &l)| ((l - shift) + gumbel(rng), i))
        .collect();
    // Descending by key, ties by index so the ordering is total.
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.truncate(k);
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Max-shifted softmax probabilities.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}
