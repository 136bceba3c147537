use rand::seq::index;

use super::{seeded_rng, LandmarkMeta, LandmarkSet, SelectorKind};
use crate::error::{Error, Result};
use crate::kernel::DataMatrix;

/// `m` distinct rows drawn uniformly without replacement.
pub fn uniform_landmarks(x: &DataMatrix, m: usize, seed: u64) -> Result<LandmarkSet> {
    let n = x.nrows();
    if m == 0 || m > n {
        return Err(Error::param("m", format!("must be in 1..={n}, got {m}")));
    }
    let mut rng = seeded_rng(seed, 0);
    let idx = index::sample(&mut rng, n, m).into_vec();
    Ok(LandmarkSet {
        points: x.select_rows(&idx),
        selector: SelectorKind::Uniform,
        seed,
        indices: Some(idx),
        meta: LandmarkMeta::None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> DataMatrix {
        DataMatrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn m_equal_n_takes_everything() {
        let x = line(9);
        let l = uniform_landmarks(&x, 9, 3).unwrap();
        let mut idx = l.indices.unwrap();
        idx.sort();
        assert_eq!(idx, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_distinct() {
        let x = line(100);
        let a = uniform_landmarks(&x, 10, 42).unwrap();
        let b = uniform_landmarks(&x, 10, 42).unwrap();
        assert_eq!(a.indices, b.indices);
        assert_eq!(a.points, b.points);
        let mut idx = a.indices.unwrap();
        idx.sort();
        idx.dedup();
        assert_eq!(idx.len(), 10);
    }

    #[test]
    fn rejects_bad_m() {
        let x = line(3);
        assert!(uniform_landmarks(&x, 4, 0).is_err());
        assert!(uniform_landmarks(&x, 0, 0).is_err());
    }

    #[test]
    fn marginals_are_uniform() {
        let n = 10;
        let x = line(n);
        let draws = 10_000;
        let mut counts = vec![0usize; n];
        for seed in 0..draws {
            let l = uniform_landmarks(&x, 1, seed).unwrap();
            counts[l.indices.unwrap()[0]] += 1;
        }
        let p = 1.0 / n as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sd + 1.0, "count {c}");
        }
    }
}
