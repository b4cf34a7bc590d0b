//! `twopoint`: run two-point conservation-law experiments from a TOML file.
//!
//! Exit status: 0 every check passed, 1 a tolerance failed, 2 bad
//! configuration, 3 the evolution diverged, 4 not enough data.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twopoint_core::Error;

use crate::config::ConfigError;

#[derive(Parser)]
#[command(
    name = "twopoint",
    version,
    about = "Two-point conservation laws for Maxwell fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Input {
    /// Experiment file.
    config: PathBuf,
    /// Overrides of the form `section.key=value`.
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve once and check every law's global balance and pointwise residual.
    Verify(Input),
    /// Residual orders over a refinement ladder.
    Converge(Input),
    /// Search for laws of a map from a random ensemble.
    Discover(Input),
    /// Point-sample invariants of a 1D evolution equation.
    Forge(Input),
    /// Translation density of a plane wave against its closed form.
    Planewave(Input),
}

fn exit_status(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Diverged { .. } | Error::NonFinite(_)) => 3,
        Some(Error::InsufficientData(_)) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let input = match &cli.command {
        Command::Verify(i)
        | Command::Converge(i)
        | Command::Discover(i)
        | Command::Forge(i)
        | Command::Planewave(i) => i,
    };
    let result =
        config::load(&input.config, &input.overrides).and_then(|(cfg, base)| match cli.command {
            Command::Verify(_) => commands::verify(&cfg, &base),
            Command::Converge(_) => commands::converge(&cfg, &base),
            Command::Discover(_) => commands::discover(&cfg),
            Command::Forge(_) => commands::forge(&cfg),
            Command::Planewave(_) => commands::planewave(&cfg),
        });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
