use nalgebra::DMatrix;

use super::weighted::weighted_sample_without_replacement_with_rng;
use super::{seeded_rng, LandmarkMeta, LandmarkSet, SelectorKind};
use crate::error::{Error, Result};
use crate::kernel::DataMatrix;
use crate::linalg::sym_evd_full;

/// Exact ridge leverage scores, the diagonal of `K (K + λI)⁻¹`, from the
/// spectral form `Σ_j U_ij² λ_j / (λ_j + λ)`. Tiny negative eigenvalues are
/// treated as zero.
pub fn ridge_leverage_scores(k: &DMatrix<f64>, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let evd = sym_evd_full(k)?;
    let n = k.nrows();
    let shrink: Vec<f64> = evd
        .eigvals
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            l / (l + lambda)
        })
        .collect();
    Ok((0..n)
        .map(|i| evd.eigvecs.row(i).iter().zip(&shrink).map(|(u, s)| u * u * s).sum())
        .collect())
}

/// `m` distinct rows drawn with probabilities proportional to their ridge
/// leverage scores.
pub fn leverage_landmarks(x: &DataMatrix, k: &DMatrix<f64>, m: usize, lambda: f64, seed: u64) -> Result<LandmarkSet> {
    let n = x.nrows();
    if k.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: k.nrows(),
        });
    }
    if m == 0 || m > n {
        return Err(Error::param("m", format!("must be in 1..={n}, got {m}")));
    }
    let scores = ridge_leverage_scores(k, lambda)?;
    let total: f64 = scores.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate("all leverage scores are zero".into()));
    }
    let probs: Vec<f64> = scores.iter().map(|s| s / total).collect();
    let idx = weighted_sample_without_replacement_with_rng(&probs, m, &mut seeded_rng(seed, 0))?;
    Ok(LandmarkSet {
        points: x.select_rows(&idx),
        selector: SelectorKind::Leverage,
        seed,
        indices: Some(idx),
        meta: LandmarkMeta::None,
    })
}
