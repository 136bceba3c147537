use rand::Rng;

use super::seeded_rng;
use crate::error::{Error, Result};

/// Weighted sampling without replacement by exponential keys: index `i` gets
/// key `u_i^(1/p_i)` and the `n1` largest keys win. Keys are compared in log
/// space, `ln(u_i) / p_i`, which preserves the order without underflow.
///
/// Returned indices are ordered by decreasing key, i.e. in draw order.
pub fn weighted_sample_without_replacement_with_rng<R: Rng>(
    probs: &[f64],
    n1: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::param("probs", format!("entry {i} is {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param("probs", format!("must sum to 1, sums to {total}")));
    }
    let support = probs.iter().filter(|&&p| p > 0.0).count();
    if n1 > support {
        return Err(Error::param(
            "n1",
            format!("cannot draw {n1} distinct indices from {support} with nonzero probability"),
        ));
    }

    // one uniform per index, zero-probability entries included, so that the
    // stream position does not depend on the support
    let mut keyed: Vec<(f64, usize)> = probs
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| {
            let u: f64 = 1.0 - rng.random::<f64>();
            (p > 0.0).then(|| (u.ln() / p, i))
        })
        .collect();
    let by_key = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if n1 < keyed.len() && n1 > 0 {
        keyed.select_nth_unstable_by(n1 - 1, by_key);
    }
    keyed.truncate(n1);
    keyed.sort_unstable_by(by_key);
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Seeded form of [`weighted_sample_without_replacement_with_rng`].
pub fn weighted_sample_without_replacement(probs: &[f64], n1: usize, seed: u64) -> Result<Vec<usize>> {
    weighted_sample_without_replacement_with_rng(probs, n1, &mut seeded_rng(seed, 0))
}
