//! Experiment configuration: a flat `key = value` file plus overrides.
//!
//! ```text
//! # comments start with '#'
//! dataset = synthetic:default
//! task = approx
//! selectors = uniform, kmeans, coreset
//! m_values = 2, 4, 6
//! r = 2
//! output = results/synthetic.csv
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nystrom_core::sampling::SelectorKind;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, BenchResult};

/// What a trial measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Normalized kernel approximation error on the full data set.
    Approx,
    /// Low-rank kernel ridge regression on a train/test split, scored by R².
    Regression,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "approx" => Ok(Task::Approx),
            "regression" => Ok(Task::Regression),
            _ => Err(format!("unknown task `{s}` (expected approx or regression)")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Approx => "approx",
            Task::Regression => "regression",
        })
    }
}

mod selector_names {
    use nystrom_core::sampling::SelectorKind;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[SelectorKind], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|k| k.name()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<SelectorKind>, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names.iter().map(|n| n.parse().map_err(D::Error::custom)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// LIBSVM path, comma-separated LIBSVM paths (concatenated), `synthetic:default`
    /// or `synthetic:<spec file>`.
    pub dataset: String,
    pub task: Task,
    #[serde(with = "selector_names")]
    pub selectors: Vec<SelectorKind>,
    pub m_values: Vec<usize>,
    pub r: usize,
    pub lambda: f64,
    pub trials: usize,
    pub n0: usize,
    pub n1_fraction: f64,
    pub kmeans_iters: usize,
    pub train_frac: f64,
    pub base_seed: u64,
    pub standardize: bool,
    /// Trial CSV path; the summary CSV and JSON report sit next to it.
    pub output: PathBuf,
    /// Gibbs steps for the DPP selector; `None` means `50·m·n`.
    pub dpp_burn_in: Option<usize>,
    /// Required for selectors that build the full `n x n` kernel matrix.
    pub allow_dense_kernel: bool,
    /// Largest `n` for which the approximation error is computed.
    pub metric_cap: usize,
    /// When off, timing columns are written as 0 so reruns are byte-identical.
    pub timing: bool,
    /// Run a single trial index instead of `0..trials`.
    pub only_trial: Option<usize>,
    pub parallel_trials: bool,
}

/// Keys accepted in config files and overrides.
pub const KEYS: [&str; 21] = [
    "dataset",
    "task",
    "selectors",
    "m_values",
    "r",
    "lambda",
    "trials",
    "n0",
    "n1_fraction",
    "kmeans_iters",
    "train_frac",
    "base_seed",
    "standardize",
    "output",
    "dpp_burn_in",
    "allow_dense_kernel",
    "metric_cap",
    "timing",
    "only_trial",
    "parallel_trials",
    "m_range",
];

const REQUIRED: [&str; 5] = ["dataset", "selectors", "m_values", "r", "output"];

fn invalid(field: &str, message: impl Into<String>) -> BenchError {
    BenchError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_value<T: FromStr>(field: &str, value: &str) -> BenchResult<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| invalid(field, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(field: &str, value: &str) -> BenchResult<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(invalid(field, format!("expected a boolean, got `{value}`"))),
    }
}

fn parse_list<T: FromStr>(field: &str, value: &str) -> BenchResult<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(field, s))
        .collect()
}

fn parse_optional<T: FromStr>(field: &str, value: &str) -> BenchResult<Option<T>>
where
    T::Err: fmt::Display,
{
    match value {
        "" | "none" | "auto" => Ok(None),
        v => parse_value(field, v).map(Some),
    }
}

impl ExperimentConfig {
    /// Defaults for every optional key; required keys are left empty.
    fn empty() -> Self {
        Self {
            dataset: String::new(),
            task: Task::Approx,
            selectors: Vec::new(),
            m_values: Vec::new(),
            r: 0,
            lambda: 1.0,
            trials: 50,
            n0: 10,
            n1_fraction: 0.2,
            kmeans_iters: 20,
            train_frac: 0.7,
            base_seed: 0,
            standardize: false,
            output: PathBuf::new(),
            dpp_burn_in: None,
            allow_dense_kernel: false,
            metric_cap: 30_000,
            timing: true,
            only_trial: None,
            parallel_trials: false,
        }
    }

    /// Parses a config file body, applies `overrides` (`key=value`) and
    /// validates the result.
    pub fn parse(text: &str, overrides: &[String]) -> BenchResult<Self> {
        let mut cfg = Self::empty();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                invalid(
                    "config",
                    format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
                )
            })?;
            let key = key.trim();
            if seen.iter().any(|k: &String| k == key) {
                return Err(invalid(key, format!("line {}: duplicate key", lineno + 1)));
            }
            cfg.set(key, value.trim())?;
            seen.push(key.to_string());
        }
        for ov in overrides {
            let (key, value) = ov
                .split_once('=')
                .ok_or_else(|| invalid("override", format!("expected key=value, got `{ov}`")))?;
            let key = key.trim();
            cfg.set(key, value.trim())?;
            seen.push(key.to_string());
        }
        for key in REQUIRED {
            let present = seen.iter().any(|k| k == key || (key == "m_values" && k == "m_range"));
            if !present {
                return Err(invalid(key, "missing required key"));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> BenchResult<()> {
        match key {
            "dataset" => self.dataset = value.to_string(),
            "task" => self.task = parse_value(key, value)?,
            "selectors" => self.selectors = parse_list(key, value)?,
            "m_values" => self.m_values = parse_list(key, value)?,
            "m_range" => {
                let (lo, hi) = value
                    .split_once("..")
                    .ok_or_else(|| invalid(key, format!("expected `lo..hi`, got `{value}`")))?;
                let lo: usize = parse_value(key, lo.trim())?;
                let hi: usize = parse_value(key, hi.trim())?;
                if lo > hi {
                    return Err(invalid(key, format!("empty range {lo}..{hi}")));
                }
                self.m_values = (lo..=hi).collect();
            }
            "r" => self.r = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "n0" => self.n0 = parse_value(key, value)?,
            "n1_fraction" => self.n1_fraction = parse_value(key, value)?,
            "kmeans_iters" => self.kmeans_iters = parse_value(key, value)?,
            "train_frac" => self.train_frac = parse_value(key, value)?,
            "base_seed" => self.base_seed = parse_value(key, value)?,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "dpp_burn_in" => self.dpp_burn_in = parse_optional(key, value)?,
            "allow_dense_kernel" => self.allow_dense_kernel = parse_bool(key, value)?,
            "metric_cap" => self.metric_cap = parse_value(key, value)?,
            "timing" => self.timing = parse_bool(key, value)?,
            "only_trial" => self.only_trial = parse_optional(key, value)?,
            "parallel_trials" => self.parallel_trials = parse_bool(key, value)?,
            _ => return Err(invalid(key, format!("unknown key (known keys: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn validate(&self) -> BenchResult<()> {
        if self.dataset.is_empty() {
            return Err(invalid("dataset", "must not be empty"));
        }
        if self.selectors.is_empty() {
            return Err(invalid("selectors", "at least one selector is required"));
        }
        if self.m_values.is_empty() {
            return Err(invalid("m_values", "at least one landmark count is required"));
        }
        if self.r == 0 {
            return Err(invalid("r", "must be at least 1"));
        }
        let m_min = *self.m_values.iter().min().unwrap();
        if self.r > m_min {
            return Err(invalid(
                "r",
                format!("rank {} exceeds the smallest m ({m_min})", self.r),
            ));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.n0 == 0 {
            return Err(invalid("n0", "must be at least 1"));
        }
        if !(self.n1_fraction > 0.0 && self.n1_fraction <= 1.0) {
            return Err(invalid(
                "n1_fraction",
                format!("must be in (0, 1], got {}", self.n1_fraction),
            ));
        }
        if self.kmeans_iters == 0 {
            return Err(invalid("kmeans_iters", "must be at least 1"));
        }
        if self.task == Task::Regression && !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(invalid(
                "train_frac",
                format!("must be in (0, 1), got {}", self.train_frac),
            ));
        }
        if self.output.as_os_str().is_empty() {
            return Err(invalid("output", "must not be empty"));
        }
        if let Some(t) = self.only_trial {
            if t >= self.trials {
                return Err(invalid(
                    "only_trial",
                    format!("trial {t} is outside 0..{}", self.trials),
                ));
            }
        }
        if let Some(dense) = self.selectors.iter().find(|k| k.needs_kernel_matrix()) {
            if !self.allow_dense_kernel {
                return Err(invalid(
                    "allow_dense_kernel",
                    format!("selector `{dense}` builds the full n x n kernel matrix; set allow_dense_kernel = true"),
                ));
            }
        }
        Ok(())
    }

    /// Seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        self.base_seed.wrapping_add(t as u64)
    }

    /// Trial indices this run executes.
    pub fn trial_indices(&self) -> Vec<usize> {
        match self.only_trial {
            Some(t) => vec![t],
            None => (0..self.trials).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Config file text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |x| x.to_string());
        let selectors: Vec<&str> = self.selectors.iter().map(|k| k.name()).collect();
        format!(
            "dataset = {}\ntask = {}\nselectors = {}\nm_values = {}\nr = {}\nlambda = {:?}\ntrials = {}\n\
             n0 = {}\nn1_fraction = {:?}\nkmeans_iters = {}\ntrain_frac = {:?}\nbase_seed = {}\n\
             standardize = {}\noutput = {}\ndpp_burn_in = {}\nallow_dense_kernel = {}\nmetric_cap = {}\n\
             timing = {}\nonly_trial = {}\nparallel_trials = {}\n",
            self.dataset,
            self.task,
            selectors.join(", "),
            join(&self.m_values),
            self.r,
            self.lambda,
            self.trials,
            self.n0,
            self.n1_fraction,
            self.kmeans_iters,
            self.train_frac,
            self.base_seed,
            self.standardize,
            self.output.display(),
            opt(self.dpp_burn_in),
            self.allow_dense_kernel,
            self.metric_cap,
            self.timing,
            opt(self.only_trial),
            self.parallel_trials,
        )
    }
}
