//! Command-line front end: configuration, dispatch and output files.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{ExperimentConfig, ExperimentKind};
pub use run::{run, Exit};

/// Numerical experiments on points with prescribed iterated derivative.
///
/// Each subcommand runs one experiment from a JSON config (missing fields take
/// the subcommand's defaults) and writes report.json, CSV data and PGM images
/// to the output directory. Exit status: 0 all verdicts pass, 1 a verdict
/// failed, 2 bad config, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "derivdist", version)]
pub struct Cli {
    #[command(subcommand)]
    pub experiment: ExperimentKind,

    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for sampled experiments; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}
