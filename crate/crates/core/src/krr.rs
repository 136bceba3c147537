//! Kernel ridge regression, exact and through a rank-`r` factor.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, rbf, DataMatrix, KernelSpec};
use crate::linalg::spd_solve;
use crate::nystrom::NystromFactors;
use crate::sampling::SelectorKind;

const PREDICT_CHUNK: usize = 256;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    Ok(())
}

/// Solves `(K + λI) α = y` by Cholesky.
pub fn fit_exact(k: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    let n = k.nrows();
    if k.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: k.ncols(),
        });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    spd_solve(a, y)
}

/// Woodbury form `α̂ = λ⁻¹ (y - L (LᵀL + λI_r)⁻¹ Lᵀ y)`, which solves
/// `(LLᵀ + λI) α̂ = y` in `O(nr² + r³)`.
pub fn fit_lowrank(l: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    if l.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: l.nrows(),
            found: y.len(),
        });
    }
    let r = l.ncols();
    let mut inner = l.tr_mul(l);
    for i in 0..r {
        inner[(i, i)] += lambda;
    }
    let lty = l.tr_mul(y);
    let t = spd_solve(inner, &lty)?;
    Ok((y - l * t) / lambda)
}

/// `1 - Σ(y - ŷ)² / Σ(y - ȳ)²`.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::param("y_true", "must be nonempty"));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let total: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if total == 0.0 {
        return Err(Error::Degenerate("constant targets, R² is undefined".into()));
    }
    let resid: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - resid / total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMode {
    Exact,
    LowRank { r: usize, m: usize, selector: SelectorKind },
}

/// Dual coefficients bound to the training set and kernel that produced them.
#[derive(Debug, Clone)]
pub struct KrrModel {
    pub alpha: DVector<f64>,
    pub train: Arc<DataMatrix>,
    pub spec: KernelSpec,
    pub lambda: f64,
    pub mode: FitMode,
}

fn train_targets(train: &DataMatrix) -> Result<DVector<f64>> {
    train
        .targets()
        .map(DVector::from_column_slice)
        .ok_or_else(|| Error::param("train", "training data has no targets"))
}

impl KrrModel {
    pub fn new(
        alpha: DVector<f64>,
        train: Arc<DataMatrix>,
        spec: KernelSpec,
        lambda: f64,
        mode: FitMode,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        if alpha.len() != train.nrows() {
            return Err(Error::DimensionMismatch {
                expected: train.nrows(),
                found: alpha.len(),
            });
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Degenerate("non-finite dual coefficients".into()));
        }
        Ok(Self {
            alpha,
            train,
            spec,
            lambda,
            mode,
        })
    }

    /// Exact fit; forms the full training kernel matrix.
    pub fn fit_exact(train: Arc<DataMatrix>, spec: KernelSpec, lambda: f64) -> Result<Self> {
        let y = train_targets(&train)?;
        let alpha = fit_exact(&gram_matrix(&train, &spec), &y, lambda)?;
        Self::new(alpha, train, spec, lambda, FitMode::Exact)
    }

    /// Low-rank fit from Nyström factors built on `train`.
    pub fn fit_lowrank(
        train: Arc<DataMatrix>,
        spec: KernelSpec,
        lambda: f64,
        factors: &NystromFactors,
    ) -> Result<Self> {
        let y = train_targets(&train)?;
        let alpha = fit_lowrank(&factors.low_rank_factor(), &y, lambda)?;
        let mode = FitMode::LowRank {
            r: factors.rank(),
            m: factors.landmarks.len(),
            selector: factors.landmarks.selector,
        };
        Self::new(alpha, train, spec, lambda, mode)
    }

    /// `ŷ = Σ_i κ(x, x_i) α_i` with exact kernel rows against every training
    /// point.
    pub fn predict(&self, x_test: &DataMatrix) -> Result<Vec<f64>> {
        if x_test.ncols() != self.train.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.train.ncols(),
                found: x_test.ncols(),
            });
        }
        let mut out = vec![0.0; x_test.nrows()];
        out.par_chunks_mut(PREDICT_CHUNK)
            .enumerate()
            .try_for_each(|(chunk, o)| -> Result<()> {
                for (local, y) in o.iter_mut().enumerate() {
                    let row = x_test.row(chunk * PREDICT_CHUNK + local);
                    let mut acc = 0.0;
                    for (i, a) in self.alpha.iter().enumerate() {
                        acc += rbf(row, self.train.row(i), &self.spec)? * a;
                    }
                    *y = acc;
                }
                Ok(())
            })?;
        Ok(out)
    }
}
