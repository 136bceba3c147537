//! Executes the (selector, m, trial) grid of an experiment.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nystrom_core::data::{split, standardize};
use nystrom_core::kernel::{gram_matrix, kernel_width_heuristic};
use nystrom_core::krr::{r2_score, KrrModel};
use nystrom_core::metrics::{approx_error, PhaseTimes, TrialReport};
use nystrom_core::nystrom::NystromFactors;
use nystrom_core::sampling::{
    coreset_landmarks, d2_coreset_landmarks, default_burn_in, kmeans_landmarks, leverage_landmarks, seeded_rng,
    uniform_landmarks, CoresetConfig, GibbsKDpp, KMeansOptions, LandmarkMeta, LandmarkSet, SelectorKind,
};
use nystrom_core::{DataMatrix, KernelMatrix, KernelSpec, Result};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Task};
use crate::dataset;
use crate::error::{BenchError, BenchResult};

/// Everything a trial needs that does not depend on the trial seed.
pub struct Prepared {
    pub data: Arc<DataMatrix>,
    /// Width and (when affordable or required) the dense kernel of the full
    /// set; only built for the approximation task.
    approx: Option<(KernelSpec, Option<KernelMatrix>)>,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig, data: DataMatrix) -> BenchResult<Self> {
        let data = if cfg.standardize { standardize(&data)? } else { data };
        let n = data.nrows();
        if let Some(&m) = cfg.m_values.iter().find(|&&m| m > n) {
            return Err(BenchError::Config {
                field: "m_values".into(),
                message: format!("m = {m} exceeds the {n} available points"),
            });
        }
        if cfg.task == Task::Regression && data.targets().is_none() {
            return Err(BenchError::Dataset {
                path: cfg.dataset.clone(),
                message: "regression needs targets".into(),
            });
        }
        let approx = match cfg.task {
            Task::Approx => {
                let spec = kernel_width_heuristic(&data)?;
                let dense_selector = cfg.selectors.iter().any(|k| k.needs_kernel_matrix());
                let kernel = (n <= cfg.metric_cap || dense_selector).then(|| gram_matrix(&data, &spec));
                Some((spec, kernel))
            }
            Task::Regression => None,
        };
        Ok(Self {
            data: Arc::new(data),
            approx,
        })
    }

    pub fn load(cfg: &ExperimentConfig) -> BenchResult<Self> {
        Self::new(cfg, dataset::load(&cfg.dataset)?)
    }
}

/// Selects `m` landmarks from `x` with the given selector. `kernel` must be
/// the Gram matrix of `x` for selectors that need it.
pub fn select_landmarks(
    kind: SelectorKind,
    x: &DataMatrix,
    kernel: Option<&KernelMatrix>,
    spec: &KernelSpec,
    m: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<LandmarkSet> {
    let coreset_cfg = || {
        let mut c = CoresetConfig::with_fraction(x.nrows(), cfg.n1_fraction, seed);
        c.n0 = cfg.n0;
        c.kmeans_iters = cfg.kmeans_iters;
        c
    };
    let dense = || kernel.expect("dense selectors receive the kernel matrix");
    match kind {
        SelectorKind::Uniform => uniform_landmarks(x, m, seed),
        SelectorKind::KMeans => kmeans_landmarks(x, &KMeansOptions::new(m, cfg.kmeans_iters), seed),
        SelectorKind::Coreset => coreset_landmarks(x, m, &coreset_cfg(), spec),
        SelectorKind::D2Coreset => d2_coreset_landmarks(x, m, &coreset_cfg(), spec),
        SelectorKind::Leverage => leverage_landmarks(x, dense(), m, cfg.lambda, seed),
        SelectorKind::Dpp => {
            let burn_in = cfg.dpp_burn_in.unwrap_or_else(|| default_burn_in(m, x.nrows()));
            let mut rng = seeded_rng(seed, 0);
            let mut chain = GibbsKDpp::new(dense(), m, &mut rng)?;
            chain.run(burn_in, &mut rng);
            let idx = chain.subset();
            Ok(LandmarkSet {
                points: x.select_rows(&idx),
                selector: kind,
                seed,
                indices: Some(idx),
                meta: LandmarkMeta::Dpp {
                    burn_in,
                    accepted: chain.accepted(),
                },
            })
        }
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed()))
}

/// Runs one (selector, m, trial) cell.
pub fn run_trial(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    kind: SelectorKind,
    m: usize,
    trial: usize,
) -> BenchResult<TrialReport> {
    let seed = cfg.trial_seed(trial);
    let start = Instant::now();
    let mut times = PhaseTimes::default();
    let (approx_err, r2) = match &prep.approx {
        Some((spec, kernel)) => {
            let x = prep.data.as_ref();
            let (landmarks, t) = timed(|| select_landmarks(kind, x, kernel.as_ref(), spec, m, cfg, seed))?;
            times.select = t;
            let (factors, t) = timed(|| NystromFactors::build(x, landmarks, spec, cfg.r))?;
            times.factor = t;
            let (err, t) = timed(|| {
                kernel
                    .as_ref()
                    .map(|k| approx_error(k, &factors.u_r, &factors.lambda_r))
                    .transpose()
            })?;
            times.fit = t;
            (err, None)
        }
        None => {
            let sp = split(prep.data.nrows(), cfg.train_frac, seed)?;
            let train = Arc::new(prep.data.select_rows(&sp.train));
            let test = prep.data.select_rows(&sp.test);
            let ((landmarks, spec), t) = timed(|| {
                let spec = kernel_width_heuristic(&train)?;
                let kernel = kind.needs_kernel_matrix().then(|| gram_matrix(&train, &spec));
                Ok((
                    select_landmarks(kind, &train, kernel.as_ref(), &spec, m, cfg, seed)?,
                    spec,
                ))
            })?;
            times.select = t;
            let (factors, t) = timed(|| NystromFactors::build(&train, landmarks, &spec, cfg.r))?;
            times.factor = t;
            let (r2, t) = timed(|| {
                let model = KrrModel::fit_lowrank(Arc::clone(&train), spec, cfg.lambda, &factors)?;
                let pred = model.predict(&test)?;
                r2_score(test.targets().expect("checked in Prepared::new"), &pred)
            })?;
            times.fit = t;
            (None, Some(r2))
        }
    };
    let total = start.elapsed();
    if !cfg.timing {
        times = PhaseTimes::default();
    }
    Ok(TrialReport {
        selector: kind.name().to_string(),
        m,
        r: cfg.r,
        trial,
        seed,
        approx_err,
        r2,
        times,
        total: if cfg.timing { total } else { Duration::ZERO },
    })
}

/// Runs every configured cell and returns the reports sorted by
/// `(selector, m, trial)`.
pub fn run_prepared(cfg: &ExperimentConfig, prep: &Prepared) -> BenchResult<Vec<TrialReport>> {
    let mut jobs = Vec::new();
    for &kind in &cfg.selectors {
        for &m in &cfg.m_values {
            for t in cfg.trial_indices() {
                jobs.push((kind, m, t));
            }
        }
    }
    let mut reports = if cfg.parallel_trials {
        jobs.par_iter()
            .map(|&(kind, m, t)| run_trial(cfg, prep, kind, m, t))
            .collect::<BenchResult<Vec<_>>>()?
    } else {
        jobs.iter()
            .map(|&(kind, m, t)| run_trial(cfg, prep, kind, m, t))
            .collect::<BenchResult<Vec<_>>>()?
    };
    reports.sort_by(|a, b| (a.selector.as_str(), a.m, a.trial).cmp(&(b.selector.as_str(), b.m, b.trial)));
    reports.dedup_by(|a, b| (a.selector.as_str(), a.m, a.trial) == (b.selector.as_str(), b.m, b.trial));
    Ok(reports)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> BenchResult<Vec<TrialReport>> {
    run_prepared(cfg, &Prepared::load(cfg)?)
}
