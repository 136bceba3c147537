//! Fixed-size determinantal point process (k-DPP) sampling by a Gibbs swap
//! chain: propose exchanging one member for one non-member and accept with
//! probability `min(1, det(K_I') / det(K_I))`.

use nalgebra::DMatrix;
use rand::Rng;

use super::seeded_rng;
use crate::error::{Error, Result};

const INIT_ATTEMPTS: usize = 10;
/// Cholesky pivots below this fraction of the diagonal count as zero.
const PIVOT_TOL: f64 = 1e-12;

/// Default chain length, `50 · m · n` proposals.
pub fn default_burn_in(m: usize, n: usize) -> usize {
    50 * m * n
}

/// Determinant of the principal submatrix `K_I` via Cholesky, or `0` when a
/// pivot collapses (singular or numerically singular submatrix).
fn subset_det(k: &DMatrix<f64>, idx: &[usize], a: &mut Vec<f64>) -> f64 {
    let m = idx.len();
    a.clear();
    for &j in idx {
        for &i in idx {
            a.push(k[(i, j)]);
        }
    }
    let mut det = 1.0;
    for j in 0..m {
        let mut d = a[j * m + j];
        for p in 0..j {
            d -= a[p * m + j] * a[p * m + j];
        }
        if d.is_nan() || d <= PIVOT_TOL * k[(idx[j], idx[j])] {
            return 0.0;
        }
        det *= d;
        let l = d.sqrt();
        a[j * m + j] = l;
        // column j of the lower factor; the upper triangle still holds K_I
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for p in 0..j {
                s -= a[p * m + j] * a[p * m + i];
            }
            a[j * m + i] = s / l;
        }
    }
    det
}

/// State of a Gibbs swap chain over size-`m` subsets of `0..n`.
pub struct GibbsKDpp<'a> {
    kernel: &'a DMatrix<f64>,
    members: Vec<usize>,
    outside: Vec<usize>,
    det: f64,
    accepted: usize,
    scratch: Vec<f64>,
    proposal: Vec<usize>,
}

impl<'a> GibbsKDpp<'a> {
    /// Starts from `m` uniformly drawn indices, redrawing up to ten times if
    /// the starting submatrix is singular.
    pub fn new<R: Rng>(kernel: &'a DMatrix<f64>, m: usize, rng: &mut R) -> Result<Self> {
        let (n, cols) = kernel.shape();
        if n != cols {
            return Err(Error::NotSquare { rows: n, cols });
        }
        if m == 0 || m >= n {
            return Err(Error::param("m", format!("need 1 <= m < n={n}, got {m}")));
        }
        let mut scratch = Vec::with_capacity(m * m);
        for _ in 0..INIT_ATTEMPTS {
            let members = rand::seq::index::sample(rng, n, m).into_vec();
            let det = subset_det(kernel, &members, &mut scratch);
            if det > 0.0 {
                let mut inside = vec![false; n];
                members.iter().for_each(|&i| inside[i] = true);
                let outside = (0..n).filter(|&i| !inside[i]).collect();
                return Ok(Self {
                    kernel,
                    proposal: members.clone(),
                    members,
                    outside,
                    det,
                    accepted: 0,
                    scratch,
                });
            }
        }
        Err(Error::Degenerate(format!(
            "no nonsingular {m}x{m} starting submatrix after {INIT_ATTEMPTS} attempts"
        )))
    }

    /// One swap proposal. Returns whether it was accepted.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> bool {
        let a = rng.random_range(0..self.members.len());
        let b = rng.random_range(0..self.outside.len());
        let u: f64 = rng.random();
        self.proposal.copy_from_slice(&self.members);
        self.proposal[a] = self.outside[b];
        let det = subset_det(self.kernel, &self.proposal, &mut self.scratch);
        if det > 0.0 && u * self.det < det {
            std::mem::swap(&mut self.members[a], &mut self.outside[b]);
            self.det = det;
            self.accepted += 1;
            true
        } else {
            false
        }
    }

    pub fn run<R: Rng>(&mut self, steps: usize, rng: &mut R) {
        for _ in 0..steps {
            self.step(rng);
        }
    }

    /// Current subset, sorted.
    pub fn subset(&self) -> Vec<usize> {
        let mut s = self.members.clone();
        s.sort_unstable();
        s
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }
}

/// Runs a fresh chain for `burn_in` proposals and returns its final subset.
pub fn dpp_landmarks(kernel: &DMatrix<f64>, m: usize, burn_in: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = seeded_rng(seed, 0);
    let mut chain = GibbsKDpp::new(kernel, m, &mut rng)?;
    chain.run(burn_in, &mut rng);
    Ok(chain.subset())
}
