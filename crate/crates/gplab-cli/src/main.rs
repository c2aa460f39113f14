//! Config-driven experiment runner for the gamma-p-Laplacian laboratory.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 numerical failure.

mod commands;
mod config;
mod output;
mod problem;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad usage, unreadable or invalid config (exit 1).
    Config(String),
    /// The computation itself failed (exit 2).
    Numerical(String),
}

impl CliError {
    fn numerical(e: impl std::fmt::Display) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Config(format!("{e:#}"))
    }
}

#[derive(Parser)]
#[command(name = "gplab", version, about = "finite-difference laboratory for -|Du|^gamma Delta_p^N u = f")]
struct Cli {
    /// Path to the run configuration (key-value text or JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for reports, fields, CSVs, and plots
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Parallel jobs for sweep subcommands
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Seed recorded in reports (the commands themselves are deterministic)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Force single-threaded execution (equivalent to --jobs 1)
    #[arg(long, global = true)]
    single_thread: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one Dirichlet problem and emit the solution field plus report
    Solve,
    /// Evaluate the Cordes condition for a coefficient field
    Cordes,
    /// Export oracle fields (radial power or 1-d |x1|^beta profile)
    Oracle,
    /// Flatness, gradient-Hoelder, and W22 estimators on a solved problem
    Regularity,
    /// Grid-refinement study against the oracle with fitted orders
    Convergence,
}

#[derive(Parser)]
struct CliWithCommand {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Cli,
}

pub struct Ctx {
    pub config_path: PathBuf,
    pub out: PathBuf,
    pub jobs: usize,
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = CliWithCommand::parse();
    let common = cli.common;
    let jobs = if common.single_thread { 1 } else { common.jobs.max(1) };
    let config_path = match &common.config {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --config PATH is required");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&common.out) {
        eprintln!("error: cannot create output directory {}: {e}", common.out.display());
        return ExitCode::from(1);
    }
    let ctx = Ctx { config_path, out: common.out, jobs, seed: common.seed };
    let result = match cli.command {
        Command::Solve => commands::solve::run(&ctx),
        Command::Cordes => commands::cordes::run(&ctx),
        Command::Oracle => commands::oracle::run(&ctx),
        Command::Regularity => commands::regularity::run(&ctx),
        Command::Convergence => commands::convergence::run(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
