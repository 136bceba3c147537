//! Lloyd's algorithm with k-means++ seeding.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use super::{seeded_rng, LandmarkMeta, LandmarkSet, SelectorKind};
use crate::error::{Error, Result};
use crate::kernel::{squared_euclidean, DataMatrix};

const ASSIGN_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub k: usize,
    pub max_iters: usize,
    /// Stop as soon as an assignment step leaves every label unchanged.
    pub stop_on_convergence: bool,
}

impl KMeansOptions {
    pub fn new(k: usize, max_iters: usize) -> Self {
        Self {
            k,
            max_iters,
            stop_on_convergence: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: DataMatrix,
    pub assignments: Vec<usize>,
    /// Lloyd updates actually performed.
    pub iterations: usize,
    /// Objective after seeding, then after every centroid update.
    pub objective_history: Vec<f64>,
}

impl KMeansResult {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().expect("history is never empty")
    }
}

/// `Σ_x min_c ‖x - c‖²`.
pub fn kmeans_objective(points: &DataMatrix, centroids: &DataMatrix) -> f64 {
    points
        .rows()
        .map(|x| {
            centroids
                .rows()
                .map(|c| squared_euclidean(x, c))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Nearest centroid per point (ties go to the lower index) and its squared
/// distance.
fn assign(points: &DataMatrix, centroids: &[Vec<f64>], labels: &mut [usize], dists: &mut [f64]) {
    labels
        .par_chunks_mut(ASSIGN_CHUNK)
        .zip(dists.par_chunks_mut(ASSIGN_CHUNK))
        .enumerate()
        .for_each(|(chunk, (lab, dis))| {
            for (local, (l, d)) in lab.iter_mut().zip(dis.iter_mut()).enumerate() {
                let x = points.row(chunk * ASSIGN_CHUNK + local);
                let mut best = (0, f64::INFINITY);
                for (j, c) in centroids.iter().enumerate() {
                    let dd = squared_euclidean(x, c);
                    if dd < best.1 {
                        best = (j, dd);
                    }
                }
                *l = best.0;
                *d = best.1;
            }
        });
}

fn plus_plus_seed<R: Rng>(points: &DataMatrix, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points.row(first).to_vec()];
    let mut best: Vec<f64> = points.rows().map(|x| squared_euclidean(x, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&best) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a centroid already
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen[next] = true;
        let c = points.row(next).to_vec();
        for (b, x) in best.iter_mut().zip(points.rows()) {
            *b = b.min(squared_euclidean(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// K-means with an explicit RNG; see [`kmeans`].
pub fn kmeans_with_rng<R: Rng>(points: &DataMatrix, opts: &KMeansOptions, rng: &mut R) -> Result<KMeansResult> {
    let (n, p, k) = (points.nrows(), points.ncols(), opts.k);
    if n == 0 {
        return Err(Error::Degenerate("k-means on an empty point set".into()));
    }
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must be in 1..={n}, got {k}")));
    }
    if opts.max_iters == 0 {
        return Err(Error::param("iters", "must be at least 1"));
    }

    let mut centroids = plus_plus_seed(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut prev_labels = vec![usize::MAX; n];
    assign(points, &centroids, &mut labels, &mut dists);
    let mut history = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;

    while iterations < opts.max_iters {
        if opts.stop_on_convergence && labels == prev_labels {
            break;
        }
        // update step
        let mut sums = vec![0.0; k * p];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums[l * p..(l + 1) * p].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut spare = dists.clone();
        for j in 0..k {
            if counts[j] > 0 {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in centroids[j].iter_mut().zip(&sums[j * p..(j + 1) * p]) {
                    *c = s * inv;
                }
            } else {
                // empty cluster: move it onto the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| spare[a].total_cmp(&spare[b]).then(b.cmp(&a)))
                    .expect("n > 0");
                spare[far] = -1.0;
                centroids[j] = points.row(far).to_vec();
            }
        }
        iterations += 1;
        std::mem::swap(&mut prev_labels, &mut labels);
        assign(points, &centroids, &mut labels, &mut dists);
        history.push(dists.iter().sum());
    }

    let flat: Vec<f64> = centroids.into_iter().flatten().collect();
    Ok(KMeansResult {
        centroids: DataMatrix::new(k, p, flat)?,
        assignments: labels,
        iterations,
        objective_history: history,
    })
}

/// K-means++ seeding followed by at most `iters` Lloyd iterations.
pub fn kmeans(points: &DataMatrix, k: usize, iters: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_with_rng(points, &KMeansOptions::new(k, iters), &mut seeded_rng(seed, 0))
}

/// Centroids of a full-data K-means run as landmarks.
pub fn kmeans_landmarks(x: &DataMatrix, opts: &KMeansOptions, seed: u64) -> Result<LandmarkSet> {
    let fit = kmeans_with_rng(x, opts, &mut seeded_rng(seed, 0))?;
    let objective = fit.objective();
    Ok(LandmarkSet {
        points: fit.centroids,
        selector: SelectorKind::KMeans,
        seed,
        indices: None,
        meta: LandmarkMeta::KMeans {
            iterations: fit.iterations,
            objective,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(n, p, (0..n * p).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
    }

    #[test]
    fn k_equals_n_recovers_points() {
        let x = random_points(12, 3, 1);
        let fit = kmeans(&x, 12, 20, 5).unwrap();
        assert_eq!(fit.objective(), 0.0);
        let mut got: Vec<Vec<f64>> = fit.centroids.rows().map(|r| r.to_vec()).collect();
        let mut want: Vec<Vec<f64>> = x.rows().map(|r| r.to_vec()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn two_obvious_clusters() {
        let x = DataMatrix::from_rows(&[[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]]).unwrap();
        // exhaustive check that {01}{23} is the unique optimal 2-partition
        let rows: Vec<&[f64]> = x.rows().collect();
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..15 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<&[f64]> = (0..4)
                    .filter(|&i| ((mask >> i) & 1 == 1) == side)
                    .map(|i| rows[i])
                    .collect();
                let c = [
                    members.iter().map(|r| r[0]).sum::<f64>() / members.len() as f64,
                    members.iter().map(|r| r[1]).sum::<f64>() / members.len() as f64,
                ];
                cost += members.iter().map(|r| squared_euclidean(r, &c)).sum::<f64>();
            }
            if cost < best.0 - 1e-12 {
                best = (cost, mask);
            }
        }
        assert!(best.1 == 0b0011 || best.1 == 0b1100);

        // k-means++ picks (0,2) after (0,0) with probability 4/208, after
        // which Lloyd stalls in the {(5,0),(5,2)} fixed point
        let optimum = vec![vec![0.0, 1.0], vec![10.0, 1.0]];
        let mut hits = 0;
        for seed in 0..200 {
            let fit = kmeans(&x, 2, 20, seed).unwrap();
            let mut c: Vec<Vec<f64>> = fit.centroids.rows().map(|r| r.to_vec()).collect();
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if c == optimum {
                hits += 1;
                assert_eq!(fit.objective(), best.0);
            } else {
                assert_eq!(c, vec![vec![5.0, 0.0], vec![5.0, 2.0]], "seed {seed}");
            }
        }
        assert!(hits >= 180, "optimum reached in {hits}/200 runs");
        let fit = kmeans(&x, 2, 20, 0).unwrap();
        assert_eq!(fit.objective(), 4.0);
    }

    #[test]
    fn single_cluster_is_mean() {
        let x = random_points(50, 4, 2);
        let fit = kmeans(&x, 1, 5, 0).unwrap();
        let mean = x.column_means();
        for (c, m) in fit.centroids.row(0).iter().zip(&mean) {
            assert_relative_eq!(*c, *m, epsilon = 1e-12);
        }
    }

    #[test]
    fn errors() {
        let x = random_points(5, 2, 3);
        assert!(kmeans(&x, 6, 10, 0).is_err());
        assert!(kmeans(&x, 2, 0, 0).is_err());
        let empty = DataMatrix::new(0, 2, vec![]).unwrap();
        assert!(matches!(kmeans(&empty, 1, 10, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn duplicate_points_with_large_k() {
        let x = DataMatrix::from_rows(&[[1.0], [1.0], [1.0], [2.0]]).unwrap();
        let fit = kmeans(&x, 3, 10, 4).unwrap();
        assert_eq!(fit.objective(), 0.0);
    }

    #[test]
    fn deterministic() {
        let x = random_points(200, 3, 8);
        let a = kmeans(&x, 7, 20, 11).unwrap();
        let b = kmeans(&x, 7, 20, 11).unwrap();
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.objective_history, b.objective_history);
    }

    #[test]
    fn fixed_iterations_run_to_cap() {
        let x = random_points(300, 2, 4);
        let mut opts = KMeansOptions::new(5, 40);
        opts.stop_on_convergence = false;
        let fit = kmeans_with_rng(&x, &opts, &mut seeded_rng(1, 0)).unwrap();
        assert_eq!(fit.iterations, 40);
        assert_eq!(fit.objective_history.len(), 41);
    }

    #[test]
    fn objective_history_matches_final_centroids() {
        let x = random_points(150, 3, 6);
        let fit = kmeans(&x, 6, 20, 2).unwrap();
        assert_relative_eq!(
            fit.objective(),
            kmeans_objective(&x, &fit.centroids),
            max_relative = 1e-12
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn objective_is_nonincreasing(n in 5usize..120, p in 1usize..5, k in 1usize..8, seed in any::<u64>()) {
            let k = k.min(n);
            let x = random_points(n, p, seed);
            let fit = kmeans(&x, k, 30, seed ^ 0x5555).unwrap();
            for w in fit.objective_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", fit.objective_history);
            }
            prop_assert!(fit.iterations <= 30);
        }
    }
}
