//! Batch front end: synthetic benchmarks, cross-validation, feature
//! selection, prediction surfaces and the combined experiment matrix.
//!
//! Exit codes: 0 ok, 2 configuration, 3 data, 4 model or fold degeneracy,
//! 5 infeasible search or design.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spatialcv::error::{Error, ErrorKind, Result};
use spatialcv::sample::Task;

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "spatialcv", version, about = "Random-Forest spatial modelling toolkit")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark (rasters, samples, ground truth)
    Synth {
        /// Task: classification or regression
        #[arg(long, default_value = "regression")]
        task: String,
        /// Benchmark seed
        #[arg(long)]
        seed: Option<u64>,
        /// Optional TOML file overriding the shipped benchmark settings
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate a model over the configured folds
    Cv {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run feature selection, then cross-validate the selected features
    Select {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Predict a surface from a saved model and a raster stack
    Predict {
        /// Saved model JSON
        #[arg(long)]
        model: PathBuf,
        /// Raster stack manifest
        #[arg(long)]
        stack: PathBuf,
        /// Output ASCII grid
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the eight-model experiment matrix and emit a combined table
    Matrix {
        #[command(flatten)]
        overrides: Overrides,
        /// Spatial fold strategy for the spatial half of the matrix
        #[arg(long, default_value = "cluster")]
        spatial: String,
    },
}

fn parse_task(name: &str) -> Result<Task> {
    match name {
        "classification" => Ok(Task::Classification),
        "regression" => Ok(Task::Regression),
        other => Err(Error::Config(format!("unknown task '{other}'"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synth { task, seed, spec, out } => commands::cmd_synth(
            parse_task(&task)?,
            seed.unwrap_or_else(commands::default_synth_seed),
            spec.as_deref(),
            &out,
        ),
        Command::Cv { overrides } => commands::cmd_cv(&RunConfig::resolve(&overrides)?),
        Command::Select { overrides } => {
            commands::cmd_select(&RunConfig::resolve(&overrides)?)
        }
        Command::Predict { model, stack, out } => {
            commands::cmd_predict(&model, &stack, &out)
        }
        Command::Matrix { overrides, spatial } => {
            commands::cmd_matrix(&RunConfig::resolve(&overrides)?, &spatial)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Degenerate => 4,
                ErrorKind::Infeasible => 5,
            })
        }
    }
}
