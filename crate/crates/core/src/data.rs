//! Data ingestion and generation: LIBSVM text files, train/test splits,
//! standardization and imbalanced Gaussian-blob data sets.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::DataMatrix;
use crate::sampling::seeded_rng;

/// RNG stream used by [`split`], distinct from the selectors' stream.
pub const SPLIT_STREAM: u64 = 1;

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Reads `<target> <index>:<value> ...` lines into a dense matrix. Indices
/// are 1-based and strictly increasing; absent features are zero and the
/// column count is the largest index seen. Blank lines and `#` comments are
/// skipped.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<DataMatrix> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets = Vec::new();
    let mut dim = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content
            .split_whitespace()
            .map(|t| (t.as_ptr() as usize - content.as_ptr() as usize + 1, t));
        let Some((col, target)) = tokens.next() else {
            continue;
        };
        let y: f64 = target
            .parse()
            .map_err(|_| parse_err(lineno, col, format!("target `{target}` is not a number")))?;
        if !y.is_finite() {
            return Err(parse_err(lineno, col, "target is not finite"));
        }
        let mut feats = Vec::new();
        let mut last = 0usize;
        for (col, tok) in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, col, format!("expected `index:value`, found `{tok}`")))?;
            let idx: i64 = idx
                .parse()
                .map_err(|_| parse_err(lineno, col, format!("index `{idx}` is not an integer")))?;
            if idx <= 0 {
                return Err(parse_err(lineno, col, format!("index {idx} must be positive")));
            }
            let idx = idx as usize;
            if idx <= last {
                return Err(parse_err(
                    lineno,
                    col,
                    format!("index {idx} does not increase (previous {last})"),
                ));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, col, format!("value `{val}` is not a number")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, col, "value is not finite"));
            }
            last = idx;
            feats.push((idx - 1, val));
        }
        dim = dim.max(last);
        rows.push(feats);
        targets.push(y);
    }
    let mut values = vec![0.0; rows.len() * dim];
    for (i, feats) in rows.iter().enumerate() {
        for &(j, v) in feats {
            values[i * dim + j] = v;
        }
    }
    DataMatrix::new(rows.len(), dim, values)?.with_targets(targets)
}

/// Writes the LIBSVM representation, omitting zero features. Rows without
/// targets get target `0`.
pub fn write_libsvm<W: Write>(data: &DataMatrix, mut out: W) -> Result<()> {
    let mut line = String::new();
    for (i, row) in data.rows().enumerate() {
        line.clear();
        let y = data.targets().map_or(0.0, |t| t[i]);
        write!(line, "{y}").expect("writing to a String");
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                write!(line, " {}:{}", j + 1, v).expect("writing to a String");
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Disjoint train/test index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random permutation of `0..n`; the first `⌊frac·n⌋` go to training.
pub fn split(n: usize, frac: f64, seed: u64) -> Result<SplitIndices> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::param("train_frac", format!("must be in (0, 1), got {frac}")));
    }
    let n_train = (frac * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::param(
            "train_frac",
            format!("split of {n} points at {frac} leaves an empty side"),
        ));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeded_rng(seed, SPLIT_STREAM));
    let test = perm.split_off(n_train);
    Ok(SplitIndices { train: perm, test })
}

/// Shifts each column to mean zero and scales it to unit sample standard
/// deviation. Constant columns end up all zero.
pub fn standardize(x: &DataMatrix) -> Result<DataMatrix> {
    let (n, p) = (x.nrows(), x.ncols());
    if n < 2 {
        return Err(Error::param("x", "standardization needs at least two rows"));
    }
    let mean = x.column_means();
    let mut var = vec![0.0; p];
    for row in x.rows() {
        for j in 0..p {
            var[j] += (row[j] - mean[j]).powi(2);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|v| {
            let sd = (v / (n - 1) as f64).sqrt();
            if sd > 0.0 {
                1.0 / sd
            } else {
                0.0
            }
        })
        .collect();
    let mut values = Vec::with_capacity(n * p);
    for row in x.rows() {
        values.extend((0..p).map(|j| (row[j] - mean[j]) * scale[j]));
    }
    let out = DataMatrix::new(n, p, values)?;
    match x.targets() {
        Some(t) => out.with_targets(t.to_vec()),
        None => Ok(out),
    }
}

/// One isotropic Gaussian blob.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub center: Vec<f64>,
    pub count: usize,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub clusters: Vec<ClusterSpec>,
    pub seed: u64,
}

/// Generated points with their true cluster labels. Targets on `data` are the
/// labels as reals.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub data: DataMatrix,
    pub labels: Vec<usize>,
}

impl SyntheticSpec {
    /// Five well-separated blobs in the plane with counts
    /// `(500, 50, 30, 20, 10)`, 610 points in total.
    pub fn default_imbalanced(seed: u64) -> Self {
        let blob = |x: f64, y: f64, count, spread| ClusterSpec {
            center: vec![x, y],
            count,
            spread,
        };
        Self {
            clusters: vec![
                blob(0.0, 0.0, 500, 1.0),
                blob(16.0, 0.0, 50, 0.5),
                blob(0.0, 16.0, 30, 0.5),
                blob(16.0, 16.0, 20, 0.5),
                blob(-16.0, 8.0, 10, 0.5),
            ],
            seed,
        }
    }

    pub fn total(&self) -> usize {
        self.clusters.iter().map(|c| c.count).sum()
    }

    pub fn dim(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.center.len())
    }

    /// At least two clusters whose sizes differ.
    pub fn is_imbalanced(&self) -> bool {
        self.clusters.len() >= 2 && self.clusters.iter().any(|c| c.count != self.clusters[0].count)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(Error::param("clusters", "need at least one cluster"));
        }
        let p = self.dim();
        if p == 0 {
            return Err(Error::param("clusters", "centers must have at least one coordinate"));
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if c.center.len() != p {
                return Err(Error::param(
                    "clusters",
                    format!("cluster {i} has dimension {} not {p}", c.center.len()),
                ));
            }
            if c.center.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("clusters", format!("cluster {i} has a non-finite center")));
            }
            if c.count == 0 {
                return Err(Error::param("clusters", format!("cluster {i} is empty")));
            }
            if !(c.spread.is_finite() && c.spread >= 0.0) {
                return Err(Error::param(
                    "clusters",
                    format!("cluster {i} has invalid spread {}", c.spread),
                ));
            }
        }
        Ok(())
    }

    /// Parses the text form:
    ///
    /// ```text
    /// seed = 7
    /// cluster = 0,0 ; 500 ; 1.0     # center ; count ; spread
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut clusters = Vec::new();
        let mut seed = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(lineno, 1, "expected `key = value`"))?;
            match key.trim() {
                "seed" => {
                    seed = value
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(lineno, 1, "seed must be a nonnegative integer"))?
                }
                "cluster" => {
                    let parts: Vec<&str> = value.split(';').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(parse_err(lineno, 1, "cluster needs `center ; count ; spread`"));
                    }
                    let center = parts[0]
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| parse_err(lineno, 1, "bad cluster center"))?;
                    let count = parts[1]
                        .parse()
                        .map_err(|_| parse_err(lineno, 1, "bad cluster count"))?;
                    let spread = parts[2]
                        .parse()
                        .map_err(|_| parse_err(lineno, 1, "bad cluster spread"))?;
                    clusters.push(ClusterSpec { center, count, spread });
                }
                other => return Err(parse_err(lineno, 1, format!("unknown key `{other}`"))),
            }
        }
        let spec = Self { clusters, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("seed = {}\n", self.seed);
        for c in &self.clusters {
            let center: Vec<String> = c.center.iter().map(|v| v.to_string()).collect();
            writeln!(s, "cluster = {} ; {} ; {}", center.join(","), c.count, c.spread).expect("writing to a String");
        }
        s
    }
}

/// Draws `center + spread · N(0, I)` points cluster by cluster.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let p = spec.dim();
    let n = spec.total();
    let mut rng = seeded_rng(spec.seed, 0);
    let mut values = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for (label, c) in spec.clusters.iter().enumerate() {
        for _ in 0..c.count {
            for &mu in &c.center {
                let z: f64 = rng.sample(StandardNormal);
                values.push(mu + c.spread * z);
            }
            labels.push(label);
        }
    }
    let data = DataMatrix::new(n, p, values)?.with_targets(labels.iter().map(|&l| l as f64).collect())?;
    Ok(SyntheticData { data, labels })
}
