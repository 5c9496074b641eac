//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a valid run whose
//! outcome is negative (no positive key, no tolerable noise, zero reach, or a
//! failed oracle check).

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::analysis::Side;
pub use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] crate::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Result of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Positive,
    Negative,
}

#[derive(Debug, Parser)]
#[command(name = "tw-cvqkd", version, about = "Key rates of two-way CV-QKD with virtual photon subtraction")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Frozen figure preset (fig3c … fig7b).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override a config value, e.g. `--set scheme.eps=0.02`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Permit `--set` on top of a preset.
    #[arg(long, global = true)]
    pub allow_override: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate at the configured operating point.
    Keyrate,
    /// Curves along the `[sweep]` axis, one per `[[curves]]` entry.
    Sweep,
    /// Optimal subtraction transmittance at the configured distance.
    OptimizeTps {
        #[arg(long, value_enum)]
        side: Option<SideArg>,
    },
    /// Largest tolerable excess noise at the configured distance.
    Noise,
    /// Longest distance whose rate stays above the cutoff.
    MaxDistance {
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// No / Alice-only / Bob-only / both-sides subtraction over the distance grid.
    Compare,
    /// Cross-checks the closed-form source covariance against both oracles.
    OracleCheck {
        #[arg(long)]
        fock_tol: Option<f64>,
        #[arg(long)]
        integral_tol: Option<f64>,
        /// Perturbs the closed form by 1e-3 to exercise the failure path.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Lists the presets, or prints one as TOML.
    Presets { name: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SideArg {
    Alice,
    Bob,
    Both,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Alice => Side::Alice,
            SideArg::Bob => Side::Bob,
            SideArg::Both => Side::Both,
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(Outcome::Positive) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
