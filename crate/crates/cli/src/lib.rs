//! The `gol` command line: train, generate, front, eval, ingest-gtsrb.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gol_core::GolError;

/// Invalid invocation, configuration or input files (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(name = "gol", version, about = "Train one-shot classifiers on Pareto-optimal synthetic data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnergyArg {
    Bhattacharyya,
    Qnorm,
    Loglik,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    VarianceSearch,
    Evolutionary,
    Scalarized,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub episodes: Option<usize>,
    /// Candidates evaluated per episode.
    #[arg(long, global = true, value_name = "N")]
    pub candidates: Option<usize>,
    /// Synthetic samples per candidate.
    #[arg(long, global = true, value_name = "M")]
    pub samples: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub energy: Option<EnergyArg>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override any config key, e.g. `--set classifier.epochs=20`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Pareto search and train the final classifier.
    Train {
        /// Continue from `checkpoint.json` in the output directory if present.
        #[arg(long)]
        resume: bool,
    },
    /// Write generated samples and a manifest.
    Generate {
        #[command(flatten)]
        source: ThetaSource,
        /// Archive to take front members from (with --front-index).
        #[arg(long, value_name = "PATH")]
        archive: Option<PathBuf>,
    },
    /// Print the Pareto front of an archive.
    Front {
        #[arg(long, value_name = "PATH")]
        archive: PathBuf,
        /// Also write the objective CSV here.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Report overall and per-class accuracy of a model on a manifest.
    Eval {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        /// Lines of `<class index> <category name>` for grouped accuracy.
        #[arg(long, value_name = "PATH")]
        categories: Option<PathBuf>,
    },
    /// Crop, resize and index a traffic-sign annotation tree.
    IngestGtsrb {
        #[arg(long, value_name = "DIR")]
        root: PathBuf,
        #[arg(long, default_value_t = 32)]
        width: usize,
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 3)]
        channels: usize,
        /// Leading images per class that form the regularization set.
        #[arg(long, default_value_t = 5)]
        regularization_per_class: usize,
        /// Template manifest to validate against the ingested classes.
        #[arg(long, value_name = "PATH")]
        templates: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ThetaSource {
    /// Use the identity parameters (all transforms off).
    #[arg(long)]
    pub identity: bool,
    /// Use the i-th front member (archive order) and its recorded seed.
    #[arg(long, value_name = "I")]
    pub front_index: Option<usize>,
    /// Read parameters from a file: 12 numbers in transform order.
    #[arg(long, value_name = "PATH")]
    pub theta_file: Option<PathBuf>,
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<GolError>() {
            return if e.is_usage() { 2 } else { 1 };
        }
    }
    1
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    commands::dispatch(cli)
}
