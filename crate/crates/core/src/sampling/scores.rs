//! Sampling distributions over the data built from distances to a small
//! seed set `S₀`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{squared_euclidean, DataMatrix, KernelSpec};

const CHUNK: usize = 2048;

/// Importance distribution `p` together with the seed set it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceScores {
    pub probs: Vec<f64>,
    pub initial_set: Vec<usize>,
    /// `d(x, S₀)` in kernel-scaled units.
    pub distances: Vec<f64>,
}

fn validate_set(n: usize, set: &[usize]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::param("s0_indices", "initial set must be nonempty"));
    }
    let mut seen = vec![false; n];
    for &i in set {
        if i >= n {
            return Err(Error::param(
                "s0_indices",
                format!("index {i} out of range for {n} points"),
            ));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::param("s0_indices", format!("index {i} repeated")));
        }
    }
    Ok(())
}

/// `d(x, S₀) = min_{x' ∈ S₀} ‖x - x'‖₂ / σ` for every row, in one pass.
pub fn distances_to_set(x: &DataMatrix, set: &[usize], spec: &KernelSpec) -> Result<Vec<f64>> {
    validate_set(x.nrows(), set)?;
    let anchors: Vec<&[f64]> = set.iter().map(|&i| x.row(i)).collect();
    let sigma = spec.sigma();
    let mut out = vec![0.0; x.nrows()];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, o)| {
        for (local, d) in o.iter_mut().enumerate() {
            let row = x.row(chunk * CHUNK + local);
            let best = anchors
                .iter()
                .map(|a| squared_euclidean(row, a))
                .fold(f64::INFINITY, f64::min);
            *d = best.sqrt() / sigma;
        }
    });
    Ok(out)
}

/// Half-uniform, half-distance mixture
/// `p(x) = 1/(2n) + d(x, S₀) / (2 Σ d(x', S₀))`.
/// Falls back to the uniform law when every distance is zero.
pub fn importance_scores(x: &DataMatrix, s0: &[usize], spec: &KernelSpec) -> Result<ImportanceScores> {
    let distances = distances_to_set(x, s0, spec)?;
    let n = distances.len();
    let total: f64 = distances.iter().sum();
    let probs = if total > 0.0 {
        let floor = 1.0 / (2.0 * n as f64);
        distances.iter().map(|d| floor + 0.5 * d / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    Ok(ImportanceScores {
        probs,
        initial_set: s0.to_vec(),
        distances,
    })
}

/// D² law `q(x) = d²(x, S₀) / Σ d²(x', S₀)`. Zero exactly on `S₀`.
pub fn d2_scores(x: &DataMatrix, s0: &[usize], spec: &KernelSpec) -> Result<Vec<f64>> {
    let sq: Vec<f64> = distances_to_set(x, s0, spec)?.into_iter().map(|d| d * d).collect();
    let total: f64 = sq.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate(
            "every point coincides with the initial set; D² scores are undefined".into(),
        ));
    }
    Ok(sq.into_iter().map(|d| d / total).collect())
}
