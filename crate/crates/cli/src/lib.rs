//! Batch experiment driver: reads a JSON config, runs one experiment and
//! writes CSV and JSON tables.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::run;
pub use config::{curve_id, Bump, Coeff, ExperimentConfig, FunctionSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(plemelj_core::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl From<plemelj_core::Error> for CliError {
    fn from(e: plemelj_core::Error) -> Self {
        use plemelj_core::Error as E;
        match e {
            E::InvalidCurve(m) | E::DegeneratePath(m) | E::InvalidInput(m) | E::InvalidParameter(m) => CliError::Validation(m),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "plemelj-lab", version, about = "Fractional Sobolev and Cauchy integral experiments on planar curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Kind {
    Norms,
    Plemelj,
    Regularity,
    SweepEquivalence,
    Murai,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Douglas, pullback and direct energies per function, s and N.
    Norms(Overrides),
    /// Plemelj splits, jump residuals and operator norms.
    Plemelj(Overrides),
    /// Dimension estimate, solvable interval and weight constants.
    Regularity(Overrides),
    /// Douglas over pullback ratios across a function family.
    SweepEquivalence(Overrides),
    /// Operator norm against the Lipschitz constant of a polar family.
    Murai(Overrides),
}

impl Command {
    pub fn split(&self) -> (Kind, &Overrides) {
        match self {
            Command::Norms(o) => (Kind::Norms, o),
            Command::Plemelj(o) => (Kind::Plemelj, o),
            Command::Regularity(o) => (Kind::Regularity, o),
            Command::SweepEquivalence(o) => (Kind::SweepEquivalence, o),
            Command::Murai(o) => (Kind::Murai, o),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Overrides {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated smoothness grid.
    #[arg(long = "s", value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Comma-separated node counts.
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Overrides {
    /// Loads the config, applies the overrides and validates the result.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = &self.s {
            cfg.s_grid = s.clone();
        }
        if let Some(n) = &self.n {
            cfg.resolutions = n.clone();
        }
        if let Some(out) = &self.out {
            cfg.outputs = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Worker cap from `PLEMELJ_THREADS`; unset or unparsable means no cap.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("PLEMELJ_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!("PLEMELJ_THREADS={v:?}"))),
        },
    }
}
