//! Normalized kernel approximation error and per-trial bookkeeping.

use std::collections::BTreeMap;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::scale_columns;

/// Orthonormality required before the trace identity is trusted.
const ORTHO_TOL: f64 = 1e-8;

fn check_shapes(k: &DMatrix<f64>, u: &DMatrix<f64>, lambda: &DVector<f64>) -> Result<f64> {
    if k.nrows() != k.ncols() {
        return Err(Error::NotSquare {
            rows: k.nrows(),
            cols: k.ncols(),
        });
    }
    if u.nrows() != k.nrows() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            found: u.nrows(),
        });
    }
    if u.ncols() != lambda.len() {
        return Err(Error::DimensionMismatch {
            expected: u.ncols(),
            found: lambda.len(),
        });
    }
    let norm = k.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("zero kernel matrix".into()));
    }
    Ok(norm)
}

/// `‖K - U diag(λ) Uᵀ‖_F / ‖K‖_F`, forming the residual explicitly.
pub fn approx_error_dense(k: &DMatrix<f64>, u: &DMatrix<f64>, lambda: &DVector<f64>) -> Result<f64> {
    let norm = check_shapes(k, u, lambda)?;
    let approx = scale_columns(u, lambda.as_slice()) * u.transpose();
    Ok((k - approx).norm() / norm)
}

/// Normalized Frobenius approximation error. When `UᵀU = I` it uses
/// `‖K‖² - 2 tr(Λ UᵀKU) + ‖Λ‖²` and never forms the `n x n` residual.
pub fn approx_error(k: &DMatrix<f64>, u: &DMatrix<f64>, lambda: &DVector<f64>) -> Result<f64> {
    let norm = check_shapes(k, u, lambda)?;
    let r = u.ncols();
    let gram = u.tr_mul(u);
    if (gram - DMatrix::identity(r, r)).amax() > ORTHO_TOL {
        return approx_error_dense(k, u, lambda);
    }
    let ku = k * u;
    let cross: f64 = (0..r).map(|j| lambda[j] * u.column(j).dot(&ku.column(j))).sum();
    let sq = norm * norm - 2.0 * cross + lambda.norm_squared();
    Ok(sq.max(0.0).sqrt() / norm)
}

/// Wall-clock time spent in each phase of a trial.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub select: Duration,
    pub factor: Duration,
    pub fit: Duration,
}

/// Outcome of one (selector, m, trial) run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub selector: String,
    pub m: usize,
    pub r: usize,
    pub trial: usize,
    pub seed: u64,
    pub approx_err: Option<f64>,
    pub r2: Option<f64>,
    pub times: PhaseTimes,
    pub total: Duration,
}

/// Sample statistics of one metric over a group of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); `0` for one sample.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Set when `count == 1`, i.e. `std` carries no information.
    pub std_undefined: bool,
}

impl Stats {
    /// Two-pass mean and variance.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("values", "cannot summarize an empty list"));
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            count,
            mean,
            std,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            std_undefined: count == 1,
        })
    }
}

/// Metric names produced by [`aggregate`], in output order.
pub const METRICS: [&str; 5] = ["approx_err", "r2", "t_select_ms", "t_factor_ms", "t_fit_ms"];

fn metric_value(r: &TrialReport, metric: &str) -> Option<f64> {
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    match metric {
        "approx_err" => r.approx_err,
        "r2" => r.r2,
        "t_select_ms" => Some(ms(r.times.select)),
        "t_factor_ms" => Some(ms(r.times.factor)),
        "t_fit_ms" => Some(ms(r.times.fit)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub selector: String,
    pub m: usize,
    pub r: usize,
    pub metric: &'static str,
    pub stats: Stats,
}

/// Mean, standard deviation, min and max of every available metric, grouped
/// by `(selector, m, r)`. Metrics that no report in a group carries are
/// skipped.
pub fn aggregate(reports: &[TrialReport]) -> Result<Vec<SummaryRow>> {
    if reports.is_empty() {
        return Err(Error::param("reports", "cannot aggregate an empty report list"));
    }
    let mut groups: BTreeMap<(&str, usize, usize), Vec<&TrialReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.selector.as_str(), r.m, r.r)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((selector, m, r), members) in groups {
        for metric in METRICS {
            let values: Vec<f64> = members.iter().filter_map(|t| metric_value(t, metric)).collect();
            if values.is_empty() {
                continue;
            }
            out.push(SummaryRow {
                selector: selector.to_string(),
                m,
                r,
                metric,
                stats: Stats::from_values(&values)?,
            });
        }
    }
    Ok(out)
}
