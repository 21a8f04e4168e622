//! Command-line front end for the `fluxlattice` simulation library.

pub mod args;
pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod manifest;
pub mod parse;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use crate::args::Cli;
use crate::error::CliError;

/// Parses `argv` (after `--config` expansion), runs the command and writes
/// its outputs. Returns the output directory.
pub fn run(cli: Cli) -> Result<PathBuf, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            log::debug!("thread pool already initialized");
        }
    }
    let name = cli.command.name();
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name));
    let config = serde_json::to_value(&cli.command).map_err(fluxlattice::Error::from)?;
    let start = Instant::now();
    let outcome = commands::run(&cli.command)?;
    let manifest = manifest::write_all(&dir, name, config, &outcome.artifacts, start.elapsed())?;
    log::info!("wrote {}", manifest.display());
    match outcome.failure {
        Some(msg) => Err(CliError::CheckFailed(msg)),
        None => Ok(dir),
    }
}

/// Expands `--config` and parses; clap errors (including `--help`) exit.
pub fn parse_args(args: Vec<OsString>) -> Result<Cli, CliError> {
    let args = config::expand(args)?;
    Ok(Cli::parse_from(args))
}
