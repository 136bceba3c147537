//! Landmark selection strategies.
//!
//! Every selector is a deterministic function of its inputs and a `u64`
//! seed. Seeds are expanded with ChaCha8, so results are stable across
//! platforms and thread counts.

mod coreset;
mod dpp;
mod kmeans;
mod leverage;
mod scores;
mod uniform;
mod weighted;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use coreset::{coreset_landmarks, d2_coreset_landmarks, CoresetConfig, ScoreRule};
pub use dpp::{default_burn_in, dpp_landmarks, GibbsKDpp};
pub use kmeans::{kmeans, kmeans_landmarks, kmeans_objective, KMeansOptions, KMeansResult};
pub use leverage::{leverage_landmarks, ridge_leverage_scores};
pub use scores::{d2_scores, distances_to_set, importance_scores, ImportanceScores};
pub use uniform::uniform_landmarks;
pub use weighted::weighted_sample_without_replacement;

use crate::error::Error;
use crate::kernel::DataMatrix;

/// Builds the RNG for a selector call. Distinct `stream`s give independent
/// sequences for the same seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Names of the available selectors, as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SelectorKind {
    Uniform,
    KMeans,
    Coreset,
    D2Coreset,
    Dpp,
    Leverage,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 6] = [
        SelectorKind::Uniform,
        SelectorKind::KMeans,
        SelectorKind::Coreset,
        SelectorKind::D2Coreset,
        SelectorKind::Dpp,
        SelectorKind::Leverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::Uniform => "uniform",
            SelectorKind::KMeans => "kmeans",
            SelectorKind::Coreset => "coreset",
            SelectorKind::D2Coreset => "d2-coreset",
            SelectorKind::Dpp => "dpp",
            SelectorKind::Leverage => "leverage",
        }
    }

    /// Selectors that return a subset of the input rows rather than centroids.
    pub fn is_subset(self) -> bool {
        matches!(self, SelectorKind::Uniform | SelectorKind::Dpp | SelectorKind::Leverage)
    }

    /// Selectors that need the full `n x n` kernel matrix.
    pub fn needs_kernel_matrix(self) -> bool {
        matches!(self, SelectorKind::Dpp | SelectorKind::Leverage)
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SelectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param("selector", format!("unknown selector `{s}`")))
    }
}

/// Selector-specific provenance attached to a [`LandmarkSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum LandmarkMeta {
    None,
    KMeans {
        iterations: usize,
        objective: f64,
    },
    Coreset {
        n0: usize,
        n1: usize,
        initial_set: Vec<usize>,
        coreset: Vec<usize>,
        iterations: usize,
    },
    Dpp {
        burn_in: usize,
        accepted: usize,
    },
}

/// `m` landmark points plus how they were obtained.
#[derive(Debug, Clone)]
pub struct LandmarkSet {
    pub points: DataMatrix,
    pub selector: SelectorKind,
    pub seed: u64,
    /// Source row indices for subset-based selectors.
    pub indices: Option<Vec<usize>>,
    pub meta: LandmarkMeta,
}

impl LandmarkSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }
}
