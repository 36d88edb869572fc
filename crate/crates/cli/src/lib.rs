//! `groundlab` command-line harness.
//!
//! Exit statuses: 0 success, 1 invariant or test failure, 2 configuration
//! or input error.

pub mod analyze;
pub mod args;
pub mod desk;
pub mod run;
pub mod score;
pub mod simulate;

use std::path::Path;

use groundlab_core::corpus::{load_claims, parse_claims, ClaimRecord};
use groundlab_core::fixtures;

pub use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

/// The corpus at `path`, or the shipped claim fixture.
pub fn corpus(path: Option<&Path>) -> Result<Vec<ClaimRecord>> {
    match path {
        Some(p) => load_claims(p).map_err(config),
        None => parse_claims(fixtures::CLAIMS.as_bytes()).map_err(config),
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn execute(cli: Cli) -> Result<()> {
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match cli.command {
        Command::Simulate(a) => simulate::cmd_simulate(&a, jobs),
        Command::Run(a) => run::cmd_run(&a, jobs),
        Command::Score(a) => score::cmd_score(&a, jobs),
        Command::Analyze(a) => analyze::cmd_analyze(&a),
        Command::Report(a) => desk::cmd_report(&a, jobs),
    }
}
