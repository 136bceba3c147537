use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nystrom_bench::report::{read_trials_csv, write_summary_csv, write_trials_csv};
use nystrom_bench::{dataset, BenchError, BenchResult, ExperimentConfig};
use nystrom_core::data::{generate_synthetic, write_libsvm};
use nystrom_core::metrics::aggregate;

#[derive(Parser)]
#[command(name = "nystrom-bench", version, about = "Nyström landmark selection benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key=value`, applied after the config file; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Write a synthetic data set in LIBSVM format (labels as targets).
    GenSynthetic {
        /// Spec file, or `default` for the built-in imbalanced layout.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-read a trial CSV and print it, or its summary with `--summary`.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        summary: bool,
    },
}

fn run(cli: Cli) -> BenchResult<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let text = std::fs::read_to_string(&config).map_err(|e| BenchError::Config {
                field: "config".into(),
                message: format!("cannot read `{}`: {e}", config.display()),
            })?;
            let cfg = ExperimentConfig::parse(&text, &overrides)?;
            let paths = nystrom_bench::run(&cfg)?;
            eprintln!(
                "wrote {}, {}, {}",
                paths.trials.display(),
                paths.summary.display(),
                paths.json.display()
            );
        }
        Command::GenSynthetic { spec, out } => {
            let spec = dataset::load_synthetic_spec(&spec)?;
            let data = generate_synthetic(&spec)?;
            let file = File::create(&out).map_err(|e| BenchError::Io {
                path: out.display().to_string(),
                message: e.to_string(),
            })?;
            write_libsvm(&data.data, BufWriter::new(file))?;
        }
        Command::Report { input, summary } => {
            let name = input.display().to_string();
            let file = File::open(&input).map_err(|e| BenchError::Dataset {
                path: name.clone(),
                message: e.to_string(),
            })?;
            let reports = read_trials_csv(file, &name)?;
            let stdout = io::stdout().lock();
            let written = if summary {
                write_summary_csv(stdout, &aggregate(&reports)?)
            } else {
                write_trials_csv(stdout, &reports)
            };
            written.map_err(|e| BenchError::Io {
                path: "stdout".into(),
                message: e.to_string(),
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
