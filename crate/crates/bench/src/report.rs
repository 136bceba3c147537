//! CSV and JSON reports.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use nystrom_core::metrics::{aggregate, PhaseTimes, Stats, SummaryRow, TrialReport, METRICS};
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, BenchResult};

pub const TRIAL_COLUMNS: [&str; 10] = [
    "selector",
    "m",
    "r",
    "trial",
    "approx_err",
    "r2",
    "t_select_ms",
    "t_factor_ms",
    "t_fit_ms",
    "seed",
];

/// Statistics reported per metric in the summary.
pub const SUMMARY_STATS: [&str; 4] = ["mean", "std", "min", "max"];

/// Summary header: group key, trial count, then `<metric>_<stat>` for every
/// metric and statistic.
pub fn summary_columns() -> Vec<String> {
    let mut cols: Vec<String> = ["selector", "m", "r", "trials"].iter().map(|s| s.to_string()).collect();
    for metric in METRICS {
        cols.extend(SUMMARY_STATS.iter().map(|st| format!("{metric}_{st}")));
    }
    cols
}

/// Summary rows of one `(selector, m, r)` group, in [`METRICS`] order.
pub struct SummaryGroup<'a> {
    pub selector: &'a str,
    pub m: usize,
    pub r: usize,
    pub rows: Vec<&'a SummaryRow>,
}

impl SummaryGroup<'_> {
    fn trials(&self) -> usize {
        self.rows.iter().map(|r| r.stats.count).max().unwrap_or(0)
    }

    fn stats(&self, metric: &str) -> Option<&Stats> {
        self.rows.iter().find(|r| r.metric == metric).map(|r| &r.stats)
    }
}

/// Groups consecutive summary rows sharing `(selector, m, r)`.
pub fn group_summary(summary: &[SummaryRow]) -> Vec<SummaryGroup<'_>> {
    let mut groups: Vec<SummaryGroup<'_>> = Vec::new();
    for row in summary {
        match groups.last_mut() {
            Some(g) if (g.selector, g.m, g.r) == (row.selector.as_str(), row.m, row.r) => g.rows.push(row),
            _ => groups.push(SummaryGroup {
                selector: &row.selector,
                m: row.m,
                r: row.r,
                rows: vec![row],
            }),
        }
    }
    groups
}

fn stat_values(s: &Stats) -> [f64; 4] {
    [s.mean, s.std, s.min, s.max]
}

/// Formats `v` with 9 significant digits, `%g` style: fixed notation for
/// decimal exponents in `-5..9`, scientific otherwise, trailing zeros
/// removed.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    if (-5..9).contains(&exp) {
        let body = if exp >= 0 {
            let (int, frac) = digits.split_at(exp as usize + 1);
            format!("{int}.{frac}")
        } else {
            format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
        };
        let body = body.trim_end_matches('0').trim_end_matches('.');
        format!("{sign}{body}")
    } else {
        let (lead, rest) = digits.split_at(1);
        let rest = rest.trim_end_matches('0');
        let mant = if rest.is_empty() {
            lead.to_string()
        } else {
            format!("{lead}.{rest}")
        };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{mant}e{esign}{:02}", exp.abs())
    }
}

/// [`format_number`] rounded value, for JSON output.
fn rounded(v: f64) -> Value {
    if v.is_finite() {
        json!(format_number(v).parse::<f64>().expect("formatted number parses"))
    } else {
        Value::Null
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn trial_fields(r: &TrialReport) -> [String; 10] {
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    [
        r.selector.clone(),
        r.m.to_string(),
        r.r.to_string(),
        r.trial.to_string(),
        opt(r.approx_err),
        opt(r.r2),
        format_number(ms(r.times.select)),
        format_number(ms(r.times.factor)),
        format_number(ms(r.times.fit)),
        r.seed.to_string(),
    ]
}

fn summary_fields(g: &SummaryGroup<'_>) -> Vec<String> {
    let mut out = vec![
        g.selector.to_string(),
        g.m.to_string(),
        g.r.to_string(),
        g.trials().to_string(),
    ];
    for metric in METRICS {
        match g.stats(metric) {
            Some(st) => out.extend(stat_values(st).map(format_number)),
            None => out.extend(std::iter::repeat_n(String::new(), SUMMARY_STATS.len())),
        }
    }
    out
}

fn write_csv<W: Write, H: AsRef<[u8]>, F: AsRef<[u8]>>(
    out: W,
    header: impl IntoIterator<Item = H>,
    rows: impl Iterator<Item = impl IntoIterator<Item = F>>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials_csv<W: Write>(out: W, reports: &[TrialReport]) -> csv::Result<()> {
    write_csv(out, TRIAL_COLUMNS, reports.iter().map(trial_fields))
}

/// One row per `(selector, m, r)` group.
pub fn write_summary_csv<W: Write>(out: W, summary: &[SummaryRow]) -> csv::Result<()> {
    write_csv(
        out,
        summary_columns(),
        group_summary(summary).iter().map(summary_fields),
    )
}

/// JSON document with the trial rows, the summary and the config echo.
pub fn to_json(cfg: &ExperimentConfig, reports: &[TrialReport], summary: &[SummaryRow]) -> Value {
    let opt = |v: Option<f64>| v.map_or(Value::Null, rounded);
    let trials: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "selector": r.selector,
                "m": r.m,
                "r": r.r,
                "trial": r.trial,
                "approx_err": opt(r.approx_err),
                "r2": opt(r.r2),
                "t_select_ms": rounded(ms(r.times.select)),
                "t_factor_ms": rounded(ms(r.times.factor)),
                "t_fit_ms": rounded(ms(r.times.fit)),
                "seed": r.seed,
            })
        })
        .collect();
    let summary: Vec<Value> = group_summary(summary)
        .iter()
        .map(|g| {
            let mut obj = Map::new();
            obj.insert("selector".into(), json!(g.selector));
            obj.insert("m".into(), json!(g.m));
            obj.insert("r".into(), json!(g.r));
            obj.insert("trials".into(), json!(g.trials()));
            for metric in METRICS {
                for (name, v) in SUMMARY_STATS
                    .iter()
                    .zip(g.stats(metric).map(stat_values).unwrap_or([f64::NAN; 4]))
                {
                    obj.insert(format!("{metric}_{name}"), rounded(v));
                }
            }
            Value::Object(obj)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("config".into(), cfg.to_json());
    doc.insert("trials".into(), Value::Array(trials));
    doc.insert("summary".into(), Value::Array(summary));
    Value::Object(doc)
}

/// Paths written by [`write_reports`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub trials: PathBuf,
    pub summary: PathBuf,
    pub json: PathBuf,
}

impl ReportPaths {
    /// `out.csv` → `out.csv`, `out_summary.csv`, `out.json`.
    pub fn for_output(output: &Path) -> Self {
        let stem = output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self {
            trials: output.to_path_buf(),
            summary: output.with_file_name(format!("{stem}_summary.csv")),
            json: output.with_extension("json"),
        }
    }
}

fn create(path: &Path) -> BenchResult<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    File::create(path).map_err(|e| BenchError::io(path, e))
}

/// Writes the trial CSV, summary CSV and JSON report for a finished run.
pub fn write_reports(cfg: &ExperimentConfig, reports: &[TrialReport]) -> BenchResult<ReportPaths> {
    let summary = aggregate(reports)?;
    let paths = ReportPaths::for_output(&cfg.output);
    write_trials_csv(create(&paths.trials)?, reports).map_err(|e| BenchError::io(&paths.trials, e))?;
    write_summary_csv(create(&paths.summary)?, &summary).map_err(|e| BenchError::io(&paths.summary, e))?;
    let doc = to_json(cfg, reports, &summary);
    let mut f = create(&paths.json)?;
    serde_json::to_writer_pretty(&mut f, &doc)
        .map_err(|e| BenchError::io(&paths.json, e))
        .and_then(|_| writeln!(f).map_err(|e| BenchError::io(&paths.json, e)))?;
    Ok(paths)
}

fn bad_csv(path: &str, message: impl Into<String>) -> BenchError {
    BenchError::Dataset {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses a trial CSV written by [`write_trials_csv`]. `name` labels errors.
pub fn read_trials_csv<R: Read>(input: R, name: &str) -> BenchResult<Vec<TrialReport>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| bad_csv(name, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != TRIAL_COLUMNS {
        return Err(bad_csv(
            name,
            format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad_csv(name, e.to_string()))?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let num = |j: usize| -> BenchResult<f64> {
            field(j).parse().map_err(|_| {
                bad_csv(
                    name,
                    format!("line {line}: bad `{}` value `{}`", TRIAL_COLUMNS[j], field(j)),
                )
            })
        };
        let opt = |j: usize| -> BenchResult<Option<f64>> {
            if field(j).is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let int = |j: usize| -> BenchResult<u64> {
            field(j).parse().map_err(|_| {
                bad_csv(
                    name,
                    format!("line {line}: bad `{}` value `{}`", TRIAL_COLUMNS[j], field(j)),
                )
            })
        };
        let dur = |j: usize| -> BenchResult<Duration> {
            let v = num(j)?;
            if v.is_finite() && v >= 0.0 {
                Ok(Duration::from_secs_f64(v / 1e3))
            } else {
                Err(bad_csv(
                    name,
                    format!("line {line}: negative duration in `{}`", TRIAL_COLUMNS[j]),
                ))
            }
        };
        let times = PhaseTimes {
            select: dur(6)?,
            factor: dur(7)?,
            fit: dur(8)?,
        };
        out.push(TrialReport {
            selector: field(0).to_string(),
            m: int(1)? as usize,
            r: int(2)? as usize,
            trial: int(3)? as usize,
            approx_err: opt(4)?,
            r2: opt(5)?,
            total: times.select + times.factor + times.fit,
            times,
            seed: int(9)?,
        });
    }
    if out.is_empty() {
        return Err(bad_csv(name, "no trial rows"));
    }
    Ok(out)
}
