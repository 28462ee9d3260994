//! `qfi-radar`: QFI tables, bound curves, oracle adjudication, Monte Carlo
//! campaigns and scenario estimation from the command line.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 I/O error.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{CommonArgs, RunConfig, ScenarioKind};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qfi-radar", version, about = "Quantum Fisher information tools for two-photon radar")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Table of QFI entries, bound products and compatibility residuals.
    Qfi(CommonArgs),
    /// Bound-product curves against the time correlation (CSV, SVG).
    Curves(CommonArgs),
    /// Compare the printed mixed-state expressions with the numerical oracle.
    OracleCheck(CommonArgs),
    /// Monte Carlo time/frequency measurements against the QCRB.
    Simulate(CommonArgs),
    /// End-to-end estimation for a two-target or moving-object scene.
    Scenario(ScenarioArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioKind>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Print the results as one JSON document.
    #[arg(long)]
    json: bool,
    /// Directory for the verdict file.
    #[arg(long, value_name = "DIR")]
    out: Option<std::path::PathBuf>,
    /// Relative error injected into the closed forms, to check that the suite fails.
    #[arg(long, hide = true, default_value_t = 0.0, allow_hyphen_values = true)]
    corrupt_constant: f64,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("QFI_RADAR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("QFI_RADAR_THREADS must be a non-negative integer, got `{v}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Qfi(a) => commands::cmd_qfi(&RunConfig::resolve(&a)?),
        Command::Curves(a) => commands::cmd_curves(&RunConfig::resolve(&a)?),
        Command::OracleCheck(a) => commands::cmd_oracle(&RunConfig::resolve(&a)?),
        Command::Simulate(a) => commands::cmd_simulate(&RunConfig::resolve(&a)?),
        Command::Scenario(a) => commands::cmd_scenario(&RunConfig::resolve(&a.common)?, a.scenario),
        Command::Selftest(a) => commands::cmd_selftest(a.json, a.corrupt_constant, a.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
