//! `metapop` command-line front end.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "metapop", version, about = "Spatial metapopulation equilibria, local approximations and their probability bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Replaces a config value, as `key=value`; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample patch locations and write `patches.csv`.
    Sample,
    /// Solve for the largest equilibrium of one sampled landscape.
    Equilibrium,
    /// Evaluate the local approximation and its envelopes on a grid.
    Approx,
    /// Evaluate every hypothesis inequality and print the margins.
    Check,
    /// Replicated verification of the upper, lower and two-sided bounds.
    BoundsExperiment,
    /// Error trend along the n-sequence of the scaling schedule.
    Scaling,
    /// Tail frequencies of the empirical-measure deviation.
    Concentration,
    /// Continuous-time chain started near the equilibrium.
    Stochastic,
    /// Print the CSV reports found in the output directory.
    Report,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<metapop::Error> for Failure {
    fn from(e: metapop::Error) -> Self {
        match e {
            metapop::Error::Config(_) => Failure::Validation(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
