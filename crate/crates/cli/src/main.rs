//! `orrw`: critical exponents and tail experiments for the once-reinforced random walk.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orrw_core::Error;

use crate::commands::{Output, ValidateArgs};
use crate::config::{parse_horizons, parse_reals, parse_window, Common};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io(_) => "IoError",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_internal() => 1,
            _ => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io(m) => m.clone(),
        }
    }
}

/// Exit status when `validate` ran but a check failed.
const CHECKS_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "orrw", version, about = "Critical exponents of the once-reinforced random walk")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical exponent at one reinforcement factor.
    Exponent {
        #[arg(long)]
        delta: f64,
    },
    /// Critical exponent over a grid of reinforcement factors.
    Sweep {
        /// Ascending, comma-separated.
        #[arg(long)]
        delta_grid: String,
    },
    /// Monte Carlo survival estimates with an optional decay-rate fit.
    Simulate {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Horizons, e.g. `1..30` or `5,10,20`.
        #[arg(long, default_value = "1..30")]
        n_grid: String,
        /// Fit window `i,j` over horizons.
        #[arg(long)]
        window: Option<String>,
    },
    /// Cross-check the spectral, variational, exact and Monte Carlo routes.
    Validate {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 200_000)]
        trials: u64,
        /// Horizon of the exact tail computation.
        #[arg(long, default_value_t = 500)]
        nmax: usize,
        /// Fit window `i,j`; derived from the exact tail when absent.
        #[arg(long)]
        window: Option<String>,
        /// Second reinforcement factor for the tail-ordering check (default 2*delta).
        #[arg(long)]
        compare_delta: Option<f64>,
    },
    /// Star/triangle test and the small-delta behaviour of the exponent.
    Classify,
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::Exponent { delta } => commands::exponent(common, *delta),
        Command::Sweep { delta_grid } => commands::sweep(common, &parse_reals(delta_grid)?),
        Command::Simulate { delta, trials, n_grid, window } => {
            let window = window.as_deref().map(parse_window).transpose()?;
            commands::simulate(common, *delta, *trials, &parse_horizons(n_grid)?, window)
        }
        Command::Validate { delta, trials, nmax, window, compare_delta } => {
            let args = ValidateArgs {
                delta: *delta,
                trials: *trials,
                nmax: *nmax,
                window: window.as_deref().map(parse_window).transpose()?,
                compare_delta: compare_delta.unwrap_or(2.0 * delta),
            };
            commands::validate(common, &args)
        }
        Command::Classify => commands::classify(common),
    }
}

fn emit(cli: &Cli, output: &Output) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    for line in &output.summary {
        writeln!(stdout, "{line}").map_err(io)?;
    }
    match &cli.common.out {
        Some(path) => fs::write(path, &output.document).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(output.document.as_bytes()).map_err(io),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|output| emit(&cli, &output).map(|_| output.passed));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECKS_FAILED),
        Err(e) => {
            eprintln!("error: {}: {}", e.code(), e.message().replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}
