//! Experiment runner CLI: loads a JSON config, dispatches to the test
//! suites, and writes `report.json` plus plot-ready CSV files.
//!
//! Exit codes: 0 when every asserted suite passed, 1 on suite failure,
//! 2 on configuration errors, 3 on numerical errors (no density, truncation
//! or degenerate weights), with the failing operation named on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use levylab::experiment::{run, ExperimentConfig, RunError, CONFIG_SCHEMA};

#[derive(Parser)]
#[command(name = "levylab", version, about = "Lévy process simulation and verification laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config (JSON; see --print-schema).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json and CSV artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Force sequential reduction for bit-exact reports.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample paths and summarize terminal statistics.
    Simulate(RunArgs),
    /// Harness orthogonality suite.
    HarnessCheck(RunArgs),
    /// Bridge constructions: pinning, agreement, weighted means.
    BridgeCheck(RunArgs),
    /// Past-future martingale tower tests.
    PfmCheck(RunArgs),
    /// Density identity check (closed form or Fourier).
    IdentityCheck(RunArgs),
    /// Default battery over all suites.
    All(RunArgs),
    /// Print the JSON schema for config files.
    PrintSchema,
}

impl Command {
    fn kind(&self) -> Option<&'static str> {
        match self {
            Command::Simulate(_) => Some("simulate"),
            Command::HarnessCheck(_) => Some("harness-check"),
            Command::BridgeCheck(_) => Some("bridge-check"),
            Command::PfmCheck(_) => Some("pfm-check"),
            Command::IdentityCheck(_) => Some("identity-check"),
            Command::All(_) => Some("all"),
            Command::PrintSchema => None,
        }
    }

    fn args(&self) -> Option<&RunArgs> {
        match self {
            Command::Simulate(a)
            | Command::HarnessCheck(a)
            | Command::BridgeCheck(a)
            | Command::PfmCheck(a)
            | Command::IdentityCheck(a)
            | Command::All(a) => Some(a),
            Command::PrintSchema => None,
        }
    }
}

const EXIT_SUITE_FAILURE: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;
const EXIT_NUMERICAL_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(kind) = cli.command.kind() else {
        println!("{CONFIG_SCHEMA}");
        return ExitCode::SUCCESS;
    };
    let args = cli.command.args().expect("run subcommands carry args");

    let text = match std::fs::read_to_string(&args.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
    };
    let mut config = match ExperimentConfig::from_json(&text) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
    };
    if config.kind() != kind {
        eprintln!(
            "config error: subcommand {kind} does not match config kind {}",
            config.kind()
        );
        return ExitCode::from(EXIT_CONFIG_ERROR);
    }
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    if args.sequential {
        config.set_sequential();
    }

    let output = match run(&config) {
        Ok(output) => output,
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            return ExitCode::from(EXIT_NUMERICAL_ERROR);
        }
    };

    if let Err(e) = write_outputs(&args.out, &output) {
        eprintln!("output error: {e}");
        return ExitCode::from(EXIT_CONFIG_ERROR);
    }

    for suite in &output.report.suites {
        let tag = if suite.pass { "pass" } else { "FAIL" };
        let recorded = if suite.asserted { "" } else { " (recorded, not asserted)" };
        println!("[{tag}] {}{recorded}", suite.name);
    }
    if output.report.pass {
        println!("all asserted suites passed");
        ExitCode::SUCCESS
    } else {
        println!("suite failure: see report.json");
        ExitCode::from(EXIT_SUITE_FAILURE)
    }
}

fn write_outputs(out_dir: &Path, output: &levylab::experiment::RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut report = serde_json::to_string_pretty(&output.report).expect("reports serialize");
    report.push('\n');
    std::fs::write(out_dir.join("report.json"), report)?;
    for (name, contents) in &output.csv_files {
        std::fs::write(out_dir.join(name), contents)?;
    }
    Ok(())
}
