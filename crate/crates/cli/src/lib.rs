//! Front end for the `dncc` binary: argument parsing, command dispatch and
//! file output. [`run`] returns the files a command produced so tests can
//! drive it without spawning a process.

pub mod commands;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dncc_core::analytic::AnalyticError;
use dncc_core::channel_model::ConfigError;
use dncc_core::code_design::DesignError;
use dncc_core::finite_field::FieldError;
use dncc_core::simulator::SimError;
use dncc_core::Scheme;
use thiserror::Error;

pub use commands::Outcome;

#[derive(Debug, Parser)]
#[command(name = "dncc", version, about = "Outage analysis and simulation for deterministic network-coded cooperation")]
pub struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "DNCC_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for Monte-Carlo runs (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form DNCC outage curves.
    Analytic(ScenarioArgs),
    /// Monte-Carlo outage for the configured scheme.
    Simulate(ScenarioArgs),
    /// Monte-Carlo outage for several schemes on the same scenario.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_values_t = Scheme::ALL.to_vec())]
        schemes: Vec<Scheme>,
    },
    /// Diversity-multiplexing tradeoff lines for every scheme.
    Dmt {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Points per line.
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Kruskal rank check of a coding matrix.
    ValidateMatrix(MatrixArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, applied after the file is read.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Shorthand for `--set n=N`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Shorthand for `--set m=M`.
    #[arg(long)]
    pub m: Option<usize>,
    /// Repeat the run for each relay count in the list.
    #[arg(long, value_delimiter = ',')]
    pub relays: Vec<usize>,
    /// Also write an SVG plot.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    /// Matrix file: header `N M L poly`, then `N+M` rows of `N` integers.
    #[arg(long, conflicts_with_all = ["n", "m"])]
    pub matrix: Option<PathBuf>,
    #[arg(long, requires = "m")]
    pub n: Option<usize>,
    #[arg(long, requires = "n")]
    pub m: Option<usize>,
    /// Field degree `L` for the built-in matrix.
    #[arg(long, default_value_t = 8)]
    pub degree: u32,
    /// Defining polynomial for the built-in matrix.
    #[arg(long, value_parser = parse_int)]
    pub polynomial: Option<u32>,
}

fn parse_int(s: &str) -> Result<u32, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("`{s}`: {e}"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Infeasible(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::ZeroInverse => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::FieldTooSmall { .. } => CliError::Infeasible(e.to_string()),
            DesignError::Field(f) => f.into(),
            DesignError::LengthMismatch { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::TooLarge { .. } | SimError::InsufficientEvents => CliError::Infeasible(e.to_string()),
            SimError::WrongScheme(_) => CliError::Usage(e.to_string()),
            SimError::Design(d) => d.into(),
            SimError::Field(f) => f.into(),
            SimError::MatrixShape { .. } => CliError::Internal(e.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Unsupported(_) | AnalyticError::NegativeGain(_) => CliError::Usage(e.to_string()),
            AnalyticError::CountOutOfRange { .. } => CliError::Internal(e.to_string()),
        }
    }
}

/// Runs the command and writes its files under `cli.out`.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let outcome = match cli.workers {
        Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?
            .install(|| commands::execute(&cli.command))?,
        None => commands::execute(&cli.command)?,
    };
    outcome.files.commit(&cli.out)?;
    Ok(outcome)
}
