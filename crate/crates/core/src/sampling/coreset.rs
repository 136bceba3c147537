//! Two-step landmark selection: draw a coreset `S₁` by importance sampling,
//! then cluster the coreset and use the centroids as landmarks.

use rand::seq::index;

use super::kmeans::{kmeans_with_rng, KMeansOptions};
use super::scores::{d2_scores, importance_scores};
use super::weighted::weighted_sample_without_replacement_with_rng;
use super::{seeded_rng, LandmarkMeta, LandmarkSet, SelectorKind};
use crate::error::{Error, Result};
use crate::kernel::{DataMatrix, KernelSpec};

/// Distribution used to draw the coreset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreRule {
    /// Half uniform, half proportional to `d(x, S₀)`.
    Importance,
    /// Proportional to `d²(x, S₀)`.
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoresetConfig {
    /// Size of the uniformly drawn initial set `S₀`.
    pub n0: usize,
    /// Coreset size `|S₁|`.
    pub n1: usize,
    pub kmeans_iters: usize,
    pub seed: u64,
    pub stop_on_convergence: bool,
}

impl CoresetConfig {
    pub const DEFAULT_N0: usize = 10;
    pub const DEFAULT_KMEANS_ITERS: usize = 20;

    pub fn new(n0: usize, n1: usize, seed: u64) -> Self {
        Self {
            n0,
            n1,
            kmeans_iters: Self::DEFAULT_KMEANS_ITERS,
            seed,
            stop_on_convergence: true,
        }
    }

    /// Default `n0` with `n1 = ⌊fraction · n⌋`.
    pub fn with_fraction(n: usize, fraction: f64, seed: u64) -> Self {
        Self::new(Self::DEFAULT_N0, (fraction * n as f64).floor() as usize, seed)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n0 == 0 || self.n0 >= self.n1 {
            return Err(Error::param(
                "n0",
                format!("need 1 <= n0 < n1, got n0={} n1={}", self.n0, self.n1),
            ));
        }
        if self.n1 > n {
            return Err(Error::param("n1", format!("coreset size {} exceeds n={n}", self.n1)));
        }
        if self.kmeans_iters == 0 {
            return Err(Error::param("kmeans_iters", "must be at least 1"));
        }
        Ok(())
    }
}

fn two_step(x: &DataMatrix, m: usize, cfg: &CoresetConfig, spec: &KernelSpec, rule: ScoreRule) -> Result<LandmarkSet> {
    let n = x.nrows();
    cfg.validate(n)?;
    if m == 0 || m > cfg.n1 {
        return Err(Error::param(
            "m",
            format!("must be in 1..={} (coreset size), got {m}", cfg.n1),
        ));
    }
    let mut rng = seeded_rng(cfg.seed, 0);

    let initial_set = index::sample(&mut rng, n, cfg.n0).into_vec();
    let probs = match rule {
        ScoreRule::Importance => importance_scores(x, &initial_set, spec)?.probs,
        ScoreRule::D2 => d2_scores(x, &initial_set, spec)?,
    };
    let coreset = weighted_sample_without_replacement_with_rng(&probs, cfg.n1, &mut rng)?;

    let opts = KMeansOptions {
        k: m,
        max_iters: cfg.kmeans_iters,
        stop_on_convergence: cfg.stop_on_convergence,
    };
    let fit = kmeans_with_rng(&x.select_rows(&coreset), &opts, &mut rng)?;
    Ok(LandmarkSet {
        points: fit.centroids,
        selector: match rule {
            ScoreRule::Importance => SelectorKind::Coreset,
            ScoreRule::D2 => SelectorKind::D2Coreset,
        },
        seed: cfg.seed,
        indices: None,
        meta: LandmarkMeta::Coreset {
            n0: cfg.n0,
            n1: cfg.n1,
            initial_set,
            coreset,
            iterations: fit.iterations,
        },
    })
}

/// Importance-sampled coreset followed by K-means on the coreset.
pub fn coreset_landmarks(x: &DataMatrix, m: usize, cfg: &CoresetConfig, spec: &KernelSpec) -> Result<LandmarkSet> {
    two_step(x, m, cfg, spec, ScoreRule::Importance)
}

/// Same pipeline with the D² distribution in place of the mixture.
pub fn d2_coreset_landmarks(x: &DataMatrix, m: usize, cfg: &CoresetConfig, spec: &KernelSpec) -> Result<LandmarkSet> {
    two_step(x, m, cfg, spec, ScoreRule::D2)
}
