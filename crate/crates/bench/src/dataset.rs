//! Resolves the `dataset` config value to a data matrix.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use nystrom_core::data::{generate_synthetic, parse_libsvm, SyntheticSpec};
use nystrom_core::DataMatrix;

use crate::error::{BenchError, BenchResult};

/// Seed of the built-in synthetic data set (`synthetic:default`).
pub const DEFAULT_SYNTHETIC_SEED: u64 = 0;

fn unreadable(path: &str, e: impl std::fmt::Display) -> BenchError {
    BenchError::Dataset {
        path: path.to_string(),
        message: e.to_string(),
    }
}

/// Reads a synthetic spec: `default` or the path of a spec file.
pub fn load_synthetic_spec(source: &str) -> BenchResult<SyntheticSpec> {
    if source == "default" {
        return Ok(SyntheticSpec::default_imbalanced(DEFAULT_SYNTHETIC_SEED));
    }
    let text = std::fs::read_to_string(source).map_err(|e| unreadable(source, e))?;
    SyntheticSpec::parse(&text).map_err(|e| unreadable(source, e))
}

fn read_libsvm(path: &str) -> BenchResult<DataMatrix> {
    let file = File::open(Path::new(path)).map_err(|e| unreadable(path, e))?;
    parse_libsvm(BufReader::new(file)).map_err(|e| unreadable(path, e))
}

/// Stacks row blocks, padding narrower blocks with zero columns.
fn concat(parts: Vec<DataMatrix>) -> BenchResult<DataMatrix> {
    let p = parts.iter().map(DataMatrix::ncols).max().unwrap_or(0);
    let n = parts.iter().map(DataMatrix::nrows).sum();
    let mut values = Vec::with_capacity(n * p);
    let mut targets = Vec::with_capacity(n);
    for part in &parts {
        for row in part.rows() {
            values.extend_from_slice(row);
            values.resize(values.len() + p - row.len(), 0.0);
        }
        targets.extend_from_slice(part.targets().unwrap_or(&[]));
    }
    let out = DataMatrix::new(n, p, values)?;
    Ok(if targets.len() == n {
        out.with_targets(targets)?
    } else {
        out
    })
}

/// Loads `synthetic:default`, `synthetic:<spec file>`, a LIBSVM file or a
/// comma-separated list of LIBSVM files.
pub fn load(dataset: &str) -> BenchResult<DataMatrix> {
    if let Some(source) = dataset.strip_prefix("synthetic:") {
        let spec = load_synthetic_spec(source)?;
        return generate_synthetic(&spec)
            .map(|d| d.data)
            .map_err(|e| unreadable(dataset, e));
    }
    let parts = dataset
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(read_libsvm)
        .collect::<BenchResult<Vec<_>>>()?;
    if parts.is_empty() {
        return Err(unreadable(dataset, "no input files"));
    }
    let data = concat(parts)?;
    if data.nrows() < 2 {
        return Err(unreadable(dataset, "fewer than two data points"));
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_pads_columns() {
        let a = DataMatrix::from_rows(&[vec![1.0]])
            .unwrap()
            .with_targets(vec![1.0])
            .unwrap();
        let b = DataMatrix::from_rows(&[vec![2.0, 3.0]])
            .unwrap()
            .with_targets(vec![2.0])
            .unwrap();
        let c = concat(vec![a, b]).unwrap();
        assert_eq!(c.ncols(), 2);
        assert_eq!(c.row(0), &[1.0, 0.0]);
        assert_eq!(c.targets().unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn default_synthetic_loads() {
        let d = load("synthetic:default").unwrap();
        assert_eq!((d.nrows(), d.ncols()), (610, 2));
    }

    #[test]
    fn missing_file_is_a_dataset_error() {
        assert!(matches!(
            load("/nonexistent/file.libsvm"),
            Err(BenchError::Dataset { .. })
        ));
    }
}
