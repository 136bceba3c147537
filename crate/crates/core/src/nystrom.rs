//! Nyström approximation `K ≈ C W† Cᵀ` and its rank-`r` restriction via a
//! thin QR of `C` and a small `m x m` eigendecomposition. No `n x n` matrix
//! is ever formed here.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, kernel_matrix, scaled_distance, DataMatrix, KernelSpec};
use crate::linalg::{householder_qr, pinv_psd_sqrt, scale_columns, sym_evd_full};
use crate::sampling::LandmarkSet;

/// Landmarks closer than this (in kernel-scaled distance) are duplicates.
pub const DEDUP_TOL: f64 = 1e-12;

/// `C = κ(X, Z)` and `W = κ(Z, Z)`.
pub fn build_cw(x: &DataMatrix, z: &DataMatrix, spec: &KernelSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if z.nrows() == 0 {
        return Err(Error::param("landmarks", "need at least one landmark"));
    }
    let c = kernel_matrix(x, z, spec)?;
    let w = gram_matrix(z, spec);
    Ok((c, w))
}

fn check_cw(c: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(Error::NotSquare {
            rows: w.nrows(),
            cols: w.ncols(),
        });
    }
    if c.ncols() != w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            found: c.ncols(),
        });
    }
    Ok(())
}

/// Rank-`m` approximation as a linear operator, `v ↦ C W† Cᵀ v`, applied
/// as `B (Bᵀ v)` with `B = C F` and `W† = F Fᵀ`.
#[derive(Debug, Clone)]
pub struct NystromOperator {
    b: DMatrix<f64>,
}

impl NystromOperator {
    pub fn new(c: DMatrix<f64>, w: &DMatrix<f64>) -> Result<Self> {
        check_cw(&c, w)?;
        Ok(Self {
            b: c * pinv_psd_sqrt(w)?,
        })
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.b.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.b.nrows(),
                found: v.len(),
            });
        }
        Ok(&self.b * self.b.tr_mul(v))
    }
}

/// `C W† Cᵀ v` for a single vector.
pub fn rank_m_apply(c: &DMatrix<f64>, w: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    NystromOperator::new(c.clone(), w)?.apply(v)
}

/// Leading `r` eigenpairs of `C W† Cᵀ`: with `C = QR` and
/// `R W† Rᵀ = V Σ Vᵀ`, returns `(Q V_r, Σ_r)`. Eigenvalues are clamped at 0.
/// The core is formed as `(RF)(RF)ᵀ` with `W† = F Fᵀ`, so it is PSD by
/// construction. A numerically rank-deficient `C` is fine: `Q` stays
/// orthonormal and the pseudo-inverse drops the null directions.
pub fn rank_r_restrict(c: &DMatrix<f64>, w: &DMatrix<f64>, r: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_cw(c, w)?;
    let (n, m) = c.shape();
    if r == 0 || r > m || m > n {
        return Err(Error::param(
            "r",
            format!("need 1 <= r <= m <= n, got r={r} m={m} n={n}"),
        ));
    }
    let f = householder_qr(c)?;
    let rf = &f.r * pinv_psd_sqrt(w)?;
    let core = &rf * rf.transpose();
    let core = (&core + core.transpose()) * 0.5;
    let evd = sym_evd_full(&core)?;
    let u_r = &f.q * evd.eigvecs.columns(0, r);
    let lambda_r = evd.eigvals.rows(0, r).map(|v| v.max(0.0));
    Ok((u_r, lambda_r))
}

/// Drops landmarks that duplicate an earlier one.
pub fn dedup_landmarks(z: &DataMatrix, spec: &KernelSpec) -> DataMatrix {
    let mut keep: Vec<usize> = Vec::with_capacity(z.nrows());
    for i in 0..z.nrows() {
        let dup = keep
            .iter()
            .any(|&j| scaled_distance(z.row(i), z.row(j), spec).is_ok_and(|d| d < DEDUP_TOL));
        if !dup {
            keep.push(i);
        }
    }
    z.select_rows(&keep)
}

/// Everything produced by one Nyström factorization.
#[derive(Debug, Clone)]
pub struct NystromFactors {
    pub c: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub u_r: DMatrix<f64>,
    pub lambda_r: DVector<f64>,
    pub landmarks: LandmarkSet,
}

impl NystromFactors {
    /// Builds `C`, `W` and the rank-`r` restriction. The Gaussian kernel is
    /// strictly positive definite, so `C` loses column rank exactly when
    /// landmarks coincide; duplicates are dropped before factoring and fewer
    /// than `r` distinct landmarks is an error.
    pub fn build(x: &DataMatrix, landmarks: LandmarkSet, spec: &KernelSpec, r: usize) -> Result<Self> {
        let mut landmarks = landmarks;
        let unique = dedup_landmarks(&landmarks.points, spec);
        if unique.nrows() < landmarks.points.nrows() {
            if unique.nrows() < r {
                return Err(Error::RankDeficient { column: unique.nrows() });
            }
            landmarks.points = unique;
            landmarks.indices = None;
        }
        let (c, w) = build_cw(x, &landmarks.points, spec)?;
        let (u_r, lambda_r) = rank_r_restrict(&c, &w, r)?;
        Ok(Self {
            c,
            w,
            u_r,
            lambda_r,
            landmarks,
        })
    }

    pub fn rank(&self) -> usize {
        self.lambda_r.len()
    }

    /// `L = Û_r Λ̂_r^{1/2}`.
    pub fn low_rank_factor(&self) -> DMatrix<f64> {
        let roots: Vec<f64> = self.lambda_r.iter().map(|l| l.max(0.0).sqrt()).collect();
        scale_columns(&self.u_r, &roots)
    }
}
