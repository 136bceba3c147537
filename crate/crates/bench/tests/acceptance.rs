//! Acceptance suite. Prints one PASS / FAIL / SKIP line per criterion and
//! exits nonzero if any criterion fails.
//!
//! Criteria 6 and 7 need the LIBSVM `satimage` and `cadata` files. Point
//! `NYSTROM_SATIMAGE` / `NYSTROM_CADATA` at them (comma-separated paths are
//! concatenated); otherwise they are skipped.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nystrom_bench::report::read_trials_csv;
use nystrom_bench::{run_experiment, ExperimentConfig};
use nystrom_core::data::{generate_synthetic, ClusterSpec, SyntheticSpec};
use nystrom_core::kernel::{gram_matrix, kernel_width_heuristic};
use nystrom_core::krr::{fit_lowrank, KrrModel};
use nystrom_core::linalg::{best_rank_r, sym_evd};
use nystrom_core::metrics::{approx_error, approx_error_dense};
use nystrom_core::nystrom::NystromFactors;
use nystrom_core::sampling::{
    coreset_landmarks, d2_scores, importance_scores, kmeans_landmarks, seeded_rng, uniform_landmarks, CoresetConfig,
    GibbsKDpp, KMeansOptions, LandmarkMeta, LandmarkSet, SelectorKind,
};
use nystrom_core::{DMatrix, DVector, DataMatrix, KernelSpec};
use rand::Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn random_data(rng: &mut impl Rng, n: usize, p: usize) -> DataMatrix {
    DataMatrix::new(n, p, (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn as_landmarks(points: DataMatrix) -> LandmarkSet {
    LandmarkSet {
        points,
        selector: SelectorKind::Uniform,
        seed: 0,
        indices: None,
        meta: LandmarkMeta::None,
    }
}

fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// 1. Z = X: rank-ρ restriction reconstructs K, low-rank KRR matches exact KRR.
fn exact_recovery() -> Verdict {
    let mut rng = seeded_rng(101, 0);
    let (mut worst_err, mut worst_pred) = (0.0f64, 0.0f64);
    let instances = 25;
    for _ in 0..instances {
        let n = rng.random_range(20..=200);
        let p = rng.random_range(1..=10);
        let mut x = random_data(&mut rng, n, p);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        x = x.with_targets(y.clone()).unwrap();
        let spec = kernel_width_heuristic(&x).unwrap();
        let k = gram_matrix(&x, &spec);
        let rho = sym_evd(&k).unwrap().rank();
        let factors = match NystromFactors::build(&x, as_landmarks(x.clone()), &spec, rho) {
            Ok(f) => f,
            Err(e) => return Verdict::Fail(format!("n={n} p={p} rho={rho}: {e}")),
        };
        worst_err = worst_err.max(approx_error_dense(&k, &factors.u_r, &factors.lambda_r).unwrap());

        let train = std::sync::Arc::new(x);
        let lambda = 0.1;
        let exact = KrrModel::fit_exact(train.clone(), spec, lambda).unwrap();
        let low = KrrModel::fit_lowrank(train.clone(), spec, lambda, &factors).unwrap();
        let test = random_data(&mut rng, 50, p);
        let a = DVector::from_vec(low.predict(&test).unwrap());
        let b = DVector::from_vec(exact.predict(&test).unwrap());
        worst_pred = worst_pred.max(rel_err(&a, &b));
    }
    verdict(
        worst_err <= 1e-6 && worst_pred <= 1e-6,
        format!("{instances} datasets, max approx error {worst_err:.2e} (tol 1e-6), max prediction rel. error {worst_pred:.2e} (tol 1e-6)"),
    )
}

// 2. Woodbury solve against a dense LU solve of (LLᵀ + λI) α = y.
fn woodbury_oracle() -> Verdict {
    let mut rng = seeded_rng(202, 0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = rng.random_range(1..=300);
        let r = rng.random_range(1..=20usize.min(n));
        let lambda = [0.1, 1.0, 10.0][i % 3];
        let l = DMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let got = fit_lowrank(&l, &y, lambda).unwrap();
        let a = &l * l.transpose() + DMatrix::identity(n, n) * lambda;
        let want = a.lu().solve(&y).expect("nonsingular");
        worst = worst.max(rel_err(&got, &want));
    }
    verdict(
        worst <= 1e-8,
        format!("100 instances, max rel. error {worst:.2e} (tol 1e-8)"),
    )
}

// 3. Importance and D² laws against a naive double loop.
fn score_laws() -> Verdict {
    let mut rng = seeded_rng(303, 0);
    let mut sum_dev = 0.0f64;
    let mut d2_dev = 0.0f64;
    for inst in 0..1000 {
        let n = rng.random_range(2..=120);
        let p = rng.random_range(1..=6);
        let x = random_data(&mut rng, n, p);
        let n0 = rng.random_range(1..n);
        let s0 = rand::seq::index::sample(&mut rng, n, n0).into_vec();
        let spec = KernelSpec::new(rng.random_range(0.1..3.0)).unwrap();

        let naive_d: Vec<f64> = (0..n)
            .map(|i| {
                let mut best = f64::INFINITY;
                for &j in &s0 {
                    let mut sq = 0.0;
                    for c in 0..p {
                        let diff = x.row(i)[c] - x.row(j)[c];
                        sq += diff * diff;
                    }
                    if sq < best {
                        best = sq;
                    }
                }
                best.sqrt() / spec.sigma()
            })
            .collect();
        let mut total = 0.0;
        for d in &naive_d {
            total += d;
        }
        let naive_p: Vec<f64> = naive_d
            .iter()
            .map(|d| 1.0 / (2 * n) as f64 + d / (2.0 * total))
            .collect();

        let s = importance_scores(&x, &s0, &spec).unwrap();
        if s.probs != naive_p {
            return Verdict::Fail(format!("instance {inst}: importance scores differ from the naive loop"));
        }
        let floor = 1.0 / (2 * n) as f64;
        if let Some(v) = s.probs.iter().find(|&&v| v < floor) {
            return Verdict::Fail(format!("instance {inst}: p = {v:e} below 1/(2n) = {floor:e}"));
        }
        sum_dev = sum_dev.max((s.probs.iter().sum::<f64>() - 1.0).abs());

        let q = d2_scores(&x, &s0, &spec).unwrap();
        if let Some(&i) = s0.iter().find(|&&i| q[i] != 0.0) {
            return Verdict::Fail(format!("instance {inst}: D² score {} on S₀ member {i}", q[i]));
        }
        d2_dev = d2_dev.max((q.iter().sum::<f64>() - 1.0).abs());
    }
    verdict(
        sum_dev <= 1e-12 && d2_dev <= 1e-12,
        format!("1000 instances, exact match; max |Σp - 1| = {sum_dev:.1e}, max |Σq - 1| = {d2_dev:.1e} (tol 1e-12)"),
    )
}

fn det(k: &DMatrix<f64>, set: &[usize]) -> f64 {
    DMatrix::from_fn(set.len(), set.len(), |a, b| k[(set[a], set[b])]).determinant()
}

// 4. Gibbs swap chain against the exhaustive m-DPP law.
fn dpp_distribution() -> Verdict {
    let mut rng = seeded_rng(404, 0);
    let samples = 100_000;
    let mut details = Vec::new();
    let mut ok = true;
    for n in 4..=6 {
        let x = random_data(&mut rng, n, 2);
        let k = gram_matrix(&x, &KernelSpec::new(0.8).unwrap());
        let pairs: Vec<[usize; 2]> = (0..n).flat_map(|i| (i + 1..n).map(move |j| [i, j])).collect();
        let weights: Vec<f64> = pairs.iter().map(|s| det(&k, s)).collect();
        let z: f64 = weights.iter().sum();

        let mut chain_rng = seeded_rng(404 + n as u64, 1);
        let mut chain = GibbsKDpp::new(&k, 2, &mut chain_rng).unwrap();
        chain.run(1_000, &mut chain_rng);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..samples {
            chain.step(&mut chain_rng);
            *counts.entry(chain.subset()).or_default() += 1;
        }
        let tv = 0.5
            * pairs
                .iter()
                .zip(&weights)
                .map(|(s, w)| (counts.get(s.as_slice()).copied().unwrap_or(0) as f64 / samples as f64 - w / z).abs())
                .sum::<f64>();
        ok &= tv <= 0.02;
        details.push(format!("n={n}: TV {tv:.4}"));
    }
    verdict(ok, format!("{} (tol 0.02, {samples} samples each)", details.join(", ")))
}

fn covers_all_regions(points: &DataMatrix, centers: &[Vec<f64>]) -> bool {
    let mut hit = vec![false; centers.len()];
    for p in points.rows() {
        let nearest = (0..centers.len())
            .min_by(|&a, &b| {
                let da: f64 = p.iter().zip(&centers[a]).map(|(x, c)| (x - c) * (x - c)).sum();
                let db: f64 = p.iter().zip(&centers[b]).map(|(x, c)| (x - c) * (x - c)).sum();
                da.total_cmp(&db)
            })
            .unwrap();
        hit[nearest] = true;
    }
    hit.iter().all(|&h| h)
}

// 5. Region coverage and accuracy on the default imbalanced data.
fn synthetic_coverage() -> Verdict {
    let spec = SyntheticSpec::default_imbalanced(nystrom_bench::dataset::DEFAULT_SYNTHETIC_SEED);
    let data = generate_synthetic(&spec).unwrap().data;
    let centers: Vec<Vec<f64>> = spec.clusters.iter().map(|c| c.center.clone()).collect();
    let n = data.nrows();
    let ks = kernel_width_heuristic(&data).unwrap();
    let k = gram_matrix(&data, &ks);
    let (m, r, trials) = (6, 2, 50u64);
    let (mut cov_core, mut cov_unif) = (0, 0);
    let (mut err_core, mut err_km) = (Vec::new(), Vec::new());
    for seed in 0..trials {
        let cfg = CoresetConfig::new(10, n / 5, seed);
        let core = coreset_landmarks(&data, m, &cfg, &ks).unwrap();
        let unif = uniform_landmarks(&data, m, seed).unwrap();
        let km = kmeans_landmarks(&data, &KMeansOptions::new(m, 20), seed).unwrap();
        cov_core += covers_all_regions(&core.points, &centers) as usize;
        cov_unif += covers_all_regions(&unif.points, &centers) as usize;
        for (set, errs) in [(core, &mut err_core), (km, &mut err_km)] {
            let f = NystromFactors::build(&data, set, &ks, r).unwrap();
            errs.push(approx_error(&k, &f.u_r, &f.lambda_r).unwrap());
        }
    }
    let (med_core, med_km) = (median(&mut err_core), median(&mut err_km));
    let ratio = med_core / med_km;
    verdict(
        cov_core as f64 >= 0.9 * trials as f64 && (cov_unif as f64) < 0.6 * trials as f64 && ratio <= 1.15,
        format!(
            "n={n}, n1={}: coreset covers all regions in {cov_core}/{trials} (need >= 90%), uniform in {cov_unif}/{trials} (need < 60%); median error coreset {med_core:.4} / kmeans {med_km:.4} = {ratio:.3} (need <= 1.15)",
            n / 5
        ),
    )
}

fn base_config(dataset: &str, body: &str) -> ExperimentConfig {
    let text = format!("dataset = {dataset}\noutput = unused.csv\ntiming = off\n{body}");
    ExperimentConfig::parse(&text, &[]).unwrap()
}

fn mean_by(
    reports: &[nystrom_core::metrics::TrialReport],
    f: impl Fn(&nystrom_core::metrics::TrialReport) -> Option<f64>,
) -> BTreeMap<(String, usize), f64> {
    let mut acc: BTreeMap<(String, usize), (f64, usize)> = BTreeMap::new();
    for r in reports {
        if let Some(v) = f(r) {
            let e = acc.entry((r.selector.clone(), r.m)).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

// 6. satimage: rank-2 floor and clustered selectors reaching it.
fn satimage() -> Verdict {
    let Ok(path) = std::env::var("NYSTROM_SATIMAGE") else {
        return Verdict::Skip("NYSTROM_SATIMAGE not set".into());
    };
    let data = match nystrom_bench::dataset::load(&path) {
        Ok(d) => d,
        Err(e) => return Verdict::Fail(format!("{e}")),
    };
    let spec = kernel_width_heuristic(&data).unwrap();
    let k = gram_matrix(&data, &spec);
    let (u, l) = best_rank_r(&k, 2).unwrap();
    let floor = approx_error(&k, &u, &l).unwrap();
    drop(k);
    let cfg = base_config(
        &path,
        "task = approx\nselectors = coreset, kmeans\nm_values = 8, 9, 10\nr = 2\ntrials = 50\n",
    );
    let reports = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("{e}")),
    };
    let means = mean_by(&reports, |r| r.approx_err);
    let worst = means.values().map(|v| (v - floor).abs()).fold(0.0, f64::max);
    verdict(
        (floor - 0.302).abs() <= 0.01 && worst <= 0.01,
        format!("n={}, rank-2 floor {floor:.4} (target 0.302 +/- 0.01); max |mean error - floor| over coreset/kmeans, m = 8..10: {worst:.4} (tol 0.01)", data.nrows()),
    )
}

// 7. cadata: coreset R² tracks K-means, uniform goes negative at m = 20.
fn cadata() -> Verdict {
    let Ok(path) = std::env::var("NYSTROM_CADATA") else {
        return Verdict::Skip("NYSTROM_CADATA not set".into());
    };
    let cfg = base_config(
        &path,
        "task = regression\nselectors = coreset, kmeans, uniform\nm_range = 20..50\nr = 20\nlambda = 1\ntrials = 50\nstandardize = true\n",
    );
    let reports = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("{e}")),
    };
    let means = mean_by(&reports, |r| r.r2);
    let worst_gap = (20..=50)
        .map(|m| (means[&("coreset".into(), m)] - means[&("kmeans".into(), m)]).abs())
        .fold(0.0, f64::max);
    let negative = reports
        .iter()
        .filter(|r| r.selector == "uniform" && r.m == 20 && r.r2.unwrap() < 0.0)
        .count();
    verdict(
        worst_gap <= 0.02 && negative > 25,
        format!("max |R² coreset - R² kmeans| over m = 20..50: {worst_gap:.4} (tol 0.02); uniform R² < 0 at m = 20 in {negative}/50 trials (need majority)"),
    )
}

// 8. Coreset selection vs full-data K-means at equal iteration counts.
fn performance() -> Verdict {
    let mut rng = seeded_rng(808, 0);
    let (n, p, m) = (50_000, 10, 30);
    let clusters: Vec<ClusterSpec> = (0..10)
        .map(|c| ClusterSpec {
            center: (0..p).map(|_| rng.random_range(-10.0..10.0)).collect(),
            count: n / 10 + if c < n % 10 { 1 } else { 0 },
            spread: 1.0 + c as f64 * 0.2,
        })
        .collect();
    let data = generate_synthetic(&SyntheticSpec { clusters, seed: 808 }).unwrap().data;
    let spec = kernel_width_heuristic(&data).unwrap();
    let iters = 20;
    let time = |f: &dyn Fn() -> usize| {
        let start = Instant::now();
        let it = f();
        (start.elapsed(), it)
    };
    let (t_core, it_core) = time(&|| {
        let mut cfg = CoresetConfig::new(10, n / 10, 1);
        cfg.kmeans_iters = iters;
        cfg.stop_on_convergence = false;
        match coreset_landmarks(&data, m, &cfg, &spec).unwrap().meta {
            LandmarkMeta::Coreset { iterations, .. } => iterations,
            _ => 0,
        }
    });
    let (t_full, it_full) = time(&|| {
        let mut opts = KMeansOptions::new(m, iters);
        opts.stop_on_convergence = false;
        match kmeans_landmarks(&data, &opts, 1).unwrap().meta {
            LandmarkMeta::KMeans { iterations, .. } => iterations,
            _ => 0,
        }
    });
    let ratio = t_core.as_secs_f64() / t_full.as_secs_f64();
    verdict(
        ratio < 0.5 && it_core == it_full,
        format!(
            "n={n}, p={p}, m={m}, n1={}: coreset {:.1} ms ({it_core} iters), full K-means {:.1} ms ({it_full} iters), ratio {ratio:.3} (need < 0.5)",
            n / 10,
            t_core.as_secs_f64() * 1e3,
            t_full.as_secs_f64() * 1e3
        ),
    )
}

fn bench_bin(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_nystrom-bench"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn csv_rows(path: &std::path::Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect()
}

// 9. Rerunning any single CLI trial reproduces its CSV row.
fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("det.cfg");
    let full = dir.path().join("full.csv");
    fs::write(
        &cfg,
        format!(
            "dataset = synthetic:default\ntask = approx\nselectors = uniform, kmeans, coreset, d2-coreset, dpp, leverage\nallow_dense_kernel = true\ndpp_burn_in = 2000\nm_values = 4, 8\nr = 2\ntrials = 4\nbase_seed = 17\ntiming = off\noutput = {}\n",
            full.display()
        ),
    )
    .unwrap();
    let cfg_s = cfg.display().to_string();
    if let Err(e) = bench_bin(&["run", "--config", &cfg_s]) {
        return Verdict::Fail(e);
    }
    let rows = csv_rows(&full);
    let mut checked = 0;
    for t in 0..4 {
        let single = dir.path().join(format!("t{t}.csv"));
        let over_out = format!("output={}", single.display());
        let over_t = format!("only_trial={t}");
        if let Err(e) = bench_bin(&[
            "run",
            "--config",
            &cfg_s,
            "--override",
            &over_t,
            "--override",
            &over_out,
        ]) {
            return Verdict::Fail(e);
        }
        for row in csv_rows(&single) {
            if !rows.contains(&row) {
                return Verdict::Fail(format!("rerun row `{row}` not found in the full run"));
            }
            checked += 1;
        }
    }
    if checked != rows.len() {
        return Verdict::Fail(format!("reruns produced {checked} rows, full run has {}", rows.len()));
    }

    // With timing on, every column except the three timings must still agree.
    let timed = dir.path().join("timed.csv");
    let timed_s = format!("output={}", timed.display());
    if let Err(e) = bench_bin(&[
        "run",
        "--config",
        &cfg_s,
        "--override",
        "timing=on",
        "--override",
        &timed_s,
    ]) {
        return Verdict::Fail(e);
    }
    let strip = |text: &str| {
        let mut rows = read_trials_csv(text.as_bytes(), "csv").unwrap();
        for r in &mut rows {
            r.times = Default::default();
            r.total = Duration::ZERO;
        }
        rows
    };
    let same = strip(&fs::read_to_string(&full).unwrap()) == strip(&fs::read_to_string(&timed).unwrap());
    verdict(
        same,
        format!("{checked} rows (6 selectors x 2 m x 4 trials) reproduced byte-identically by single-trial reruns; non-timing fields identical with timing on: {same}"),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "exact recovery",
            limit: Some(Duration::from_secs(10)),
            run: exact_recovery,
        },
        Criterion {
            id: 2,
            name: "woodbury oracle",
            limit: Some(Duration::from_secs(30)),
            run: woodbury_oracle,
        },
        Criterion {
            id: 3,
            name: "importance-score laws",
            limit: Some(Duration::from_secs(10)),
            run: score_laws,
        },
        Criterion {
            id: 4,
            name: "dpp distribution",
            limit: Some(Duration::from_secs(60)),
            run: dpp_distribution,
        },
        Criterion {
            id: 5,
            name: "synthetic coverage",
            limit: Some(Duration::from_secs(120)),
            run: synthetic_coverage,
        },
        Criterion {
            id: 6,
            name: "satimage floor",
            limit: Some(Duration::from_secs(900)),
            run: satimage,
        },
        Criterion {
            id: 7,
            name: "cadata regression",
            limit: Some(Duration::from_secs(1800)),
            run: cadata,
        },
        Criterion {
            id: 8,
            name: "coreset speed",
            limit: Some(Duration::from_secs(300)),
            run: performance,
        },
        Criterion {
            id: 9,
            name: "cli determinism",
            limit: None,
            run: cli_determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let v = (c.run)();
        let elapsed = start.elapsed();
        let over = c.limit.filter(|&l| elapsed > l);
        let (tag, detail) = match (v, over) {
            (Verdict::Skip(d), _) => ("SKIP", d),
            (Verdict::Pass(d), None) => ("PASS", d),
            (Verdict::Pass(d), Some(l)) => ("FAIL", format!("{d}; runtime over the {}s limit", l.as_secs())),
            (Verdict::Fail(d), _) => ("FAIL", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        let line = format!(
            "criterion {} [{}] {tag} ({:.2}s): {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
        println!("{line}");
    }
    println!(
        "acceptance: {} passed/skipped, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
