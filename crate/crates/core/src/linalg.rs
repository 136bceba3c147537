//! Dense symmetric eigendecomposition, Householder QR, PSD pseudo-inverse and
//! the exact best rank-`r` approximation used as a reference floor.
//!
//! The factorizations are delegated to `nalgebra`; this module fixes the
//! conventions on top of them (ordering, sign normalization, numerical rank
//! cutoffs) so that downstream code sees deterministic, reduced factors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by the symmetric routines.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Reduced eigendecomposition `A ≈ U diag(λ) Uᵀ` with `λ` nonincreasing.
#[derive(Debug, Clone)]
pub struct Evd {
    pub eigvecs: DMatrix<f64>,
    pub eigvals: DVector<f64>,
}

impl Evd {
    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = scale_columns(&self.eigvecs, self.eigvals.as_slice());
        &scaled * self.eigvecs.transpose()
    }
}

/// Thin QR factors with orthonormal `q` and upper-triangular `r` whose
/// diagonal is nonnegative.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

/// `n · ε · scale`, the numerical-rank threshold for an `n`-dimensional problem.
pub fn rank_cutoff(n: usize, scale: f64) -> f64 {
    n as f64 * f64::EPSILON * scale
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let scale = a.amax();
    let mut worst = 0.0f64;
    for j in 0..cols {
        for i in j + 1..rows {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

/// Multiplies column `j` of `m` by `d[j]`.
pub fn scale_columns(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

/// Full eigendecomposition, all `n` eigenpairs sorted nonincreasing. Each
/// eigenvector is sign-normalized so its largest-magnitude entry is positive.
pub fn sym_evd_full(a: &DMatrix<f64>) -> Result<Evd> {
    check_symmetric(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Evd {
            eigvecs: DMatrix::zeros(0, 0),
            eigvals: DVector::zeros(0),
        });
    }
    // symmetrize exactly so nalgebra sees a clean input
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));

    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = eig.eigenvalues[src];
        let col = eig.eigenvectors.column(src);
        let pivot = col
            .iter()
            .fold(0.0f64, |best, &v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vecs.column_mut(dst).copy_from(&(col * sign));
    }
    Ok(Evd {
        eigvecs: vecs,
        eigvals: vals,
    })
}

/// Reduced eigendecomposition: eigenpairs with `|λ| ≤ n·ε·max|λ|` are dropped.
pub fn sym_evd(a: &DMatrix<f64>) -> Result<Evd> {
    let full = sym_evd_full(a)?;
    let n = a.nrows();
    let scale = full.eigvals.amax();
    let cutoff = rank_cutoff(n, scale);
    let keep: Vec<usize> = (0..n).filter(|&i| full.eigvals[i].abs() > cutoff).collect();
    Ok(Evd {
        eigvecs: full.eigvecs.select_columns(&keep),
        eigvals: DVector::from_iterator(keep.len(), keep.iter().map(|&i| full.eigvals[i])),
    })
}

/// Householder QR of a tall matrix with a nonnegative diagonal in `R`. `Q`
/// has orthonormal columns whatever the rank of `c`.
pub fn householder_qr(c: &DMatrix<f64>) -> Result<QrFactors> {
    let (n, m) = c.shape();
    if n < m {
        return Err(Error::param("c", format!("QR needs rows >= cols, got {n}x{m}")));
    }
    if m == 0 {
        return Ok(QrFactors {
            q: DMatrix::zeros(n, 0),
            r: DMatrix::zeros(0, 0),
        });
    }
    let qr = c.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for k in 0..m {
        if r[(k, k)] < 0.0 {
            r.row_mut(k).neg_mut();
            q.column_mut(k).neg_mut();
        }
    }
    Ok(QrFactors { q, r })
}

/// [`householder_qr`] that fails on a diagonal entry of `R` with
/// `|R_kk| < max(n, m)·ε·|R_11|`, naming the first deficient column.
pub fn qr(c: &DMatrix<f64>) -> Result<QrFactors> {
    let f = householder_qr(c)?;
    let (n, m) = c.shape();
    if m == 0 {
        return Ok(f);
    }
    let r = &f.r;
    if r[(0, 0)] == 0.0 {
        return Err(Error::RankDeficient { column: 0 });
    }
    let tol = rank_cutoff(n.max(m), r[(0, 0)].abs());
    if let Some(k) = (1..m).find(|&k| r[(k, k)].abs() < tol) {
        return Err(Error::RankDeficient { column: k });
    }
    Ok(f)
}

/// Moore–Penrose pseudo-inverse of a symmetric PSD matrix. Eigenvalues at or
/// below `m·ε·λ_max` (and all nonpositive ones) are treated as zero.
pub fn pinv_psd(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let evd = sym_evd_full(w)?;
    let m = w.nrows();
    let lmax = evd.eigvals.iter().cloned().fold(0.0, f64::max);
    if lmax <= 0.0 {
        return Ok(DMatrix::zeros(m, m));
    }
    let cutoff = rank_cutoff(m, lmax);
    let inv: Vec<f64> = evd
        .eigvals
        .iter()
        .map(|&l| if l > cutoff { 1.0 / l } else { 0.0 })
        .collect();
    let scaled = scale_columns(&evd.eigvecs, &inv);
    let p = &scaled * evd.eigvecs.transpose();
    Ok((&p + p.transpose()) * 0.5)
}

/// Square-root factor `F = U_k Λ_k^{-1/2}` of the pseudo-inverse, so that
/// `W† = F Fᵀ`, using the same cutoff as [`pinv_psd`]. Products through `F`
/// stay accurate where forming `W†` explicitly would amplify rounding by the
/// condition number of `W`.
pub fn pinv_psd_sqrt(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let evd = sym_evd_full(w)?;
    let m = w.nrows();
    let lmax = evd.eigvals.iter().cloned().fold(0.0, f64::max);
    if lmax <= 0.0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    let cutoff = rank_cutoff(m, lmax);
    let keep: Vec<usize> = (0..m).filter(|&i| evd.eigvals[i] > cutoff).collect();
    let inv_sqrt: Vec<f64> = keep.iter().map(|&i| evd.eigvals[i].sqrt().recip()).collect();
    Ok(scale_columns(&evd.eigvecs.select_columns(&keep), &inv_sqrt))
}

/// The `r` leading eigenpairs of `k`, i.e. the factors of the best rank-`r`
/// approximation in Frobenius norm. Computes the complete decomposition.
pub fn best_rank_r(k: &DMatrix<f64>, r: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = k.nrows();
    if r == 0 || r > n {
        return Err(Error::param("r", format!("must be in 1..={n}, got {r}")));
    }
    let evd = sym_evd_full(k)?;
    Ok((
        evd.eigvecs.columns(0, r).into_owned(),
        evd.eigvals.rows(0, r).into_owned(),
    ))
}

/// Solves `a x = b` for symmetric positive definite `a` via Cholesky.
pub fn spd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(b))
}

/// Relative Frobenius distance `‖a - b‖_F / ‖b‖_F`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
