//! `seqdetect`: batch front-end for solving extreme problems, tabulating
//! separation rates and estimating test errors by Monte Carlo.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for
//! numerical failures. Errors go to standard error prefixed with
//! `error[config]:` or `error[numeric]:`.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{ExperimentConfig, DEFAULT_REPS};
use output::Format;
use run::{Action, Run};

/// Environment variable overriding the RNG seed of the config file.
const SEED_VAR: &str = "SEQDETECT_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
}

impl From<seqdetect::Error> for CliError {
    fn from(e: seqdetect::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl CliError {
    fn report(&self) -> ExitCode {
        match self {
            CliError::Config(m) => {
                eprintln!("error[config]: {m}");
                ExitCode::from(2)
            }
            CliError::Numeric(m) => {
                eprintln!("error[numeric]: {m}");
                ExitCode::from(3)
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "seqdetect", version, about = "Minimax signal detection in Gaussian sequence models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the extreme problem of the spec.
    Solve(Common),
    /// Tabulate separation rates and adaptive rates.
    Rates(Common),
    /// Estimate the errors of one test by Monte Carlo.
    Mc(Common),
    /// Repeat the Monte Carlo estimate over a grid of r or eps values.
    Sweep(Common),
    /// Run one adaptive test over a grid of (alpha, beta) specs.
    Adaptive(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Monte Carlo replicates (overrides the config).
    #[arg(long)]
    reps: Option<u64>,
    /// RNG seed (overrides SEQDETECT_SEED and the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo.
    #[arg(long)]
    threads: Option<usize>,
    /// Per-replicate CSV output (mc only).
    #[arg(long)]
    raw: Option<PathBuf>,
}

fn resolve(action: Action, c: Common) -> Result<Run, CliError> {
    let text = std::fs::read_to_string(&c.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", c.config.display())))?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", c.config.display())))?;
    let env_seed = match std::env::var(SEED_VAR) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("{SEED_VAR} must be an unsigned integer, got '{v}'")))?,
        ),
        Err(_) => None,
    };
    let seed = c.seed.or(env_seed).or(config.seed).unwrap_or(0);
    let reps = c.reps.or(config.reps).unwrap_or(DEFAULT_REPS);
    if reps == 0 {
        return Err(CliError::Config("reps must be at least 1".into()));
    }
    if c.threads == Some(0) {
        return Err(CliError::Config("threads must be at least 1".into()));
    }
    if c.raw.is_some() && action != Action::Mc {
        return Err(CliError::Config("--raw applies only to mc".into()));
    }
    config.seed = Some(seed);
    config.reps = Some(reps);
    Ok(Run {
        config,
        seed,
        reps,
        threads: c.threads,
        format: c.format,
        out: c.out,
        raw: c.raw,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (action, common) = match cli.command {
        Command::Solve(c) => (Action::Solve, c),
        Command::Rates(c) => (Action::Rates, c),
        Command::Mc(c) => (Action::Mc, c),
        Command::Sweep(c) => (Action::Sweep, c),
        Command::Adaptive(c) => (Action::Adaptive, c),
    };
    let result = resolve(action, common).and_then(|r| {
        let files = run::run(action, &r)?;
        output::write_all(&files)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
