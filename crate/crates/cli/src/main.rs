//! `vafee`: fair-fee tables and validation reports for variable annuities
//! with a two-layer fee structure.
//!
//! Exit codes: 0 success, 1 failed validation check, 2 configuration error,
//! 3 solver failure.

mod config;
mod table;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::JobConfig;

#[derive(Debug, Parser)]
#[command(name = "vafee", version, about = "Fair fee rates for variable annuities with state-dependent fees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the fair fee for every value of the configured sweep.
    Table(Common),
    /// Run the invariant and Monte Carlo checks on one configuration.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Shift the first upward root by this amount before building the
        /// distribution (negative control).
        #[arg(long, hide = true)]
        corrupt_root: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML job file; built-in defaults apply to anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the worker pool (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    Checks(usize),
    Io(anyhow::Error),
}

impl Failure {
    fn report(&self) -> u8 {
        match self {
            Failure::Config(e) => {
                eprintln!("configuration error: {e:#}");
                2
            }
            Failure::Solver(e) => {
                eprintln!("solver failure: {e:#}");
                3
            }
            Failure::Checks(n) => {
                eprintln!("{n} validation check(s) failed");
                1
            }
            Failure::Io(e) => {
                eprintln!("error: {e:#}");
                1
            }
        }
    }
}

fn prepare(common: &Common) -> Result<JobConfig, Failure> {
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Config(e.into()))?;
    }
    let mut job = JobConfig::load(common.config.as_deref()).map_err(Failure::Config)?;
    if let Some(seed) = common.seed {
        job.simulation.seed = seed;
    }
    Ok(job)
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Table(common) => {
            let job = prepare(&common)?;
            let (_, rows) = table::run_table(&job)?;
            let text = match common.format {
                Format::Csv => table::to_csv(&rows),
                Format::Json => table::to_json(&rows).map_err(Failure::Io)?,
            };
            emit(&common, &text)
        }
        Command::Validate { common, corrupt_root } => {
            let job = prepare(&common)?;
            let checks = validate::run_validate(&job, corrupt_root)?;
            let text = match common.format {
                Format::Csv => validate::to_csv(&checks),
                Format::Json => validate::to_json(&checks).map_err(Failure::Io)?,
            };
            emit(&common, &text)?;
            match checks.iter().filter(|c| !c.passed()).count() {
                0 => Ok(()),
                n => Err(Failure::Checks(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => ExitCode::from(failure.report()),
    }
}
