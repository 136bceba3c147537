//! Gaussian RBF kernel `κ(x, y) = exp(-‖x - y‖² / σ²)` and the dense
//! matrices built from it.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per parallel work unit when filling kernel matrices.
pub const ROW_BLOCK: usize = 256;

/// Dense symmetric kernel matrix.
pub type KernelMatrix = DMatrix<f64>;

/// Kernel width of the Gaussian RBF kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    sigma: f64,
}

impl KernelSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param(
                "sigma",
                format!("must be positive and finite, got {sigma}"),
            ));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Row-major `n x p` matrix of input points with optional regression targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    targets: Option<Vec<f64>>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(
                "values",
                format!(
                    "non-finite entry at row {}, column {}",
                    pos / cols.max(1),
                    pos % cols.max(1)
                ),
            ));
        }
        Ok(Self {
            rows,
            cols,
            values,
            targets: None,
        })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn with_targets(mut self, targets: Vec<f64>) -> Result<Self> {
        if targets.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: targets.len(),
            });
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("targets", "non-finite target"));
        }
        self.targets = Some(targets);
        Ok(self)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn targets(&self) -> Option<&[f64]> {
        self.targets.as_deref()
    }

    /// Copies the listed rows (and their targets) into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        DataMatrix {
            rows: indices.len(),
            cols: self.cols,
            values,
            targets: self.targets.as_ref().map(|t| indices.iter().map(|&i| t[i]).collect()),
        }
    }

    /// Column-wise sample mean.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for r in self.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    fn squared_norms(&self) -> Vec<f64> {
        self.rows().map(|r| dot(r, r)).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

/// `‖x - y‖₂ / σ`.
pub fn scaled_distance(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    check_dims(x, y)?;
    Ok(squared_euclidean(x, y).sqrt() / spec.sigma)
}

/// Gaussian RBF similarity, always in `(0, 1]`.
pub fn rbf(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    let d = scaled_distance(x, y, spec)?;
    Ok((-d * d).exp())
}

#[inline]
fn rbf_from_expansion(na: f64, nb: f64, ab: f64, inv_sigma2: f64) -> f64 {
    let sq = (na + nb - 2.0 * ab).max(0.0);
    (-sq * inv_sigma2).exp()
}

/// Cross kernel matrix with entry `(i, j) = κ(a_i, b_j)`.
pub fn kernel_matrix(a: &DataMatrix, b: &DataMatrix, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    if a.cols != b.cols {
        return Err(Error::DimensionMismatch {
            expected: a.cols,
            found: b.cols,
        });
    }
    let (n, m) = (a.rows, b.rows);
    let na = a.squared_norms();
    let nb = b.squared_norms();
    let inv_sigma2 = 1.0 / (spec.sigma * spec.sigma);
    let mut buf = vec![0.0; n * m];
    if m > 0 {
        buf.par_chunks_mut(ROW_BLOCK * m)
            .enumerate()
            .for_each(|(block, chunk)| {
                for (local, out) in chunk.chunks_mut(m).enumerate() {
                    let i = block * ROW_BLOCK + local;
                    let ai = a.row(i);
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = rbf_from_expansion(na[i], nb[j], dot(ai, b.row(j)), inv_sigma2);
                    }
                }
            });
    }
    Ok(DMatrix::from_row_slice(n, m, &buf))
}

/// Square kernel matrix of `x` against itself. Each unordered pair is evaluated
/// once, so the result is exactly symmetric with a unit diagonal.
pub fn gram_matrix(x: &DataMatrix, spec: &KernelSpec) -> KernelMatrix {
    let n = x.rows;
    let norms = x.squared_norms();
    let inv_sigma2 = 1.0 / (spec.sigma * spec.sigma);
    let mut buf = vec![0.0; n * n];
    if n > 0 {
        buf.par_chunks_mut(ROW_BLOCK * n)
            .enumerate()
            .for_each(|(block, chunk)| {
                for (local, out) in chunk.chunks_mut(n).enumerate() {
                    let i = block * ROW_BLOCK + local;
                    let xi = x.row(i);
                    out[i] = 1.0;
                    for j in i + 1..n {
                        out[j] = rbf_from_expansion(norms[i], norms[j], dot(xi, x.row(j)), inv_sigma2);
                    }
                }
            });
    }
    for i in 0..n {
        for j in i + 1..n {
            buf[j * n + i] = buf[i * n + j];
        }
    }
    // symmetric, so the row-major buffer is also a valid column-major one
    DMatrix::from_vec(n, n, buf)
}

/// Kernel width as the mean Euclidean distance of the points from their
/// coordinatewise mean.
pub fn kernel_width_heuristic(x: &DataMatrix) -> Result<KernelSpec> {
    if x.rows == 0 {
        return Err(Error::Degenerate("empty data set".into()));
    }
    let mean = x.column_means();
    let total: f64 = x.rows().map(|r| squared_euclidean(r, &mean).sqrt()).sum();
    let sigma = total / x.rows as f64;
    if sigma <= 0.0 {
        return Err(Error::Degenerate(
            "all points are identical, kernel width would be zero".into(),
        ));
    }
    KernelSpec::new(sigma)
}
