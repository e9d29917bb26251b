//! Experiment front end for robust Hankel recovery: signal generation,
//! single recoveries, convergence sweeps, phase-transition grids and the
//! direction-of-arrival scenario.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod pool;

use std::path::PathBuf;

use args::{Command, Invocation};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("output: {0}")]
    Output(String),
    #[error("solver: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Output(_) | CliError::Solver(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const USAGE: &str = "\
usage: hankelx <gen|recover|converge|phase|doa> [--config FILE] [--seed U64]
               [--threads N] [--out DIR] [--key value] [key=value ...]

Values are parsed as JSON when possible; comma-separated values become lists.
HANKELX_THREADS sets the worker count when --threads is absent.
Exit codes: 0 success, 1 solver failure, 2 usage or config error.";

/// Runs one invocation and returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let inv = match args::parse(argv) {
        Ok(inv) => inv,
        Err(e) => {
            eprintln!("{e}\n\n{USAGE}");
            return e.exit_code();
        }
    };
    if inv.help {
        println!("{USAGE}");
        return 0;
    }
    match dispatch(&inv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hankelx: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(inv: &Invocation) -> CliResult<i32> {
    let doc = config::assemble(inv)?;
    let threads = config::resolve_threads(inv.threads, &doc)?;
    match inv.command {
        Command::Gen => {
            let cfg: commands::gen::GenConfig = config::parse(doc)?;
            let out = commands::gen::run(&cfg)?;
            println!("{}", out.describe());
            Ok(0)
        }
        Command::Recover => {
            let cfg: commands::recover::RecoverConfig = config::parse(doc)?;
            let out = commands::recover::run(&cfg)?;
            println!("{}", out.summary.describe());
            Ok(if out.summary.termination == "failed" { 1 } else { 0 })
        }
        Command::Converge => {
            let cfg: commands::converge::ConvergeConfig = config::parse(doc)?;
            let out = commands::converge::run(&cfg, threads)?;
            println!("{}", out.describe());
            Ok(0)
        }
        Command::Phase => {
            let cfg: commands::phase::PhaseConfig = config::parse(doc)?;
            let out = commands::phase::run(&cfg, threads)?;
            println!("{}", out.describe());
            Ok(0)
        }
        Command::Doa => {
            let cfg: commands::doa::DoaConfig = config::parse(doc)?;
            let out = commands::doa::run(&cfg, threads)?;
            println!("{}", out.describe());
            Ok(if out.first().termination == "failed" { 1 } else { 0 })
        }
    }
}

pub(crate) fn default_out() -> PathBuf {
    PathBuf::from("hankelx-out")
}
