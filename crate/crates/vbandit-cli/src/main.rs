mod analyze;
mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit code for configuration problems.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for runtime failures.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "vbandit",
    about = "Non-stationary bandit experiments: run horizon grids, sweep variation budgets, fit regret-growth slopes",
    version
)]
struct Cli {
    /// Worker threads for replication (overrides VBANDIT_WORKERS and the
    /// config file).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Master seed override (takes precedence over the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fixed-budget experiment over the config's horizon grid.
    Run {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the horizon grid once per budget exponent in `beta_grid` and fit
    /// the slope table.
    SweepBeta {
        /// Experiment config (TOML) with a `beta_grid`.
        #[arg(long)]
        config: PathBuf,
    },
    /// Refit the log-log slope from a stored grid CSV.
    Analyze {
        /// Grid CSV produced by `run` or `sweep-beta`.
        #[arg(long)]
        input: PathBuf,
        /// Where to write the JSON slope report (default: alongside the
        /// input).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = run::Overrides {
        workers: cli.workers,
        seed: cli.seed,
    };
    let result = match cli.command {
        Command::Run { config } => run::cmd_run(&config, &overrides),
        Command::SweepBeta { config } => run::cmd_sweep_beta(&config, &overrides),
        Command::Analyze { input, output } => analyze::cmd_analyze(&input, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Error carrying the exit code contract: 2 for config errors, 3 for
/// runtime errors.
#[derive(Debug)]
pub struct CliError {
    source: anyhow::Error,
    config_error: bool,
}

impl CliError {
    pub fn config(source: anyhow::Error) -> Self {
        Self {
            source,
            config_error: true,
        }
    }

    pub fn runtime(source: anyhow::Error) -> Self {
        Self {
            source,
            config_error: false,
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.config_error {
            EXIT_CONFIG
        } else {
            EXIT_RUNTIME
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if f.alternate() {
            write!(f, "{:#}", self.source)
        } else {
            write!(f, "{}", self.source)
        }
    }
}
