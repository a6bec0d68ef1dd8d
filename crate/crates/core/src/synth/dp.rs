//! Differential-privacy primitives: the Laplace mechanism's noise sampler and
//! the exponential mechanism's weighted selection.

use rand::Rng;

/// Draw Laplace(0, scale) noise by inverse-CDF sampling.
pub fn laplace<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    assert!(scale >= 0.0, "negative noise scale");
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Analytic Laplace(0, scale) CDF.
pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// Select a candidate index with probability proportional to
/// `exp(epsilon * score / (2 * sensitivity))`.
///
/// Weights are computed relative to the maximum score, so very large budgets
/// degrade gracefully into argmax selection instead of overflowing.
pub fn exponential_mechanism<R: Rng>(
    rng: &mut R,
    scores: &[f64],
    epsilon: f64,
    sensitivity: f64,
) -> usize {
    assert!(!scores.is_empty(), "no candidates");
    assert!(
        epsilon > 0.0 && sensitivity > 0.0,
        "invalid mechanism parameters"
    );
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| (epsilon * (s - max) / (2.0 * sensitivity)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Sensitivity bound for empirical mutual information over `n` records
/// (binary-case bound, applied uniformly):
/// `(2/n)·ln((n+1)/2) + ((n−1)/n)·ln((n+1)/(n−1))`.
pub fn mi_sensitivity(n: usize) -> f64 {
    let n = n.max(2) as f64;
    (2.0 / n) * ((n + 1.0) / 2.0).ln() + ((n - 1.0) / n) * ((n + 1.0) / (n - 1.0)).ln()
}
