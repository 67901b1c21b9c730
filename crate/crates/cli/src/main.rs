//! `nsflow`: ingest datasets, measure NS hosting, analyze stored snapshots.

mod commands;
mod config;
mod datasets;
mod error;
mod report;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use commands::analyze::AnalyzeArgs;
use commands::diff::DiffArgs;
use commands::measure::MeasureArgs;
use config::BackendChoice;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "nsflow", version, about = "Authoritative nameserver hosting measurements")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH", default_value = "nsflow.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and label the configured datasets and cache the prefix index.
    Ingest,
    /// Resolve the domain list and store a dated snapshot.
    Measure {
        /// Only the N best-ranked domains.
        #[arg(long, value_name = "N")]
        limit: Option<usize>,
        /// `live` or `fixture:PATH`.
        #[arg(long, value_name = "BACKEND")]
        backend: Option<BackendChoice>,
        /// Run date recorded in the snapshot; defaults to the configured one, then today.
        #[arg(long, value_name = "DATE")]
        date: Option<NaiveDate>,
    },
    /// Write report tables from stored snapshots.
    Analyze(AnalyzeArgs),
    /// Compare two domain lists or two provider rankings.
    Diff(DiffArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest => commands::ingest::run(&cli.config),
        Command::Measure { limit, backend, date } => {
            commands::measure::run(&cli.config, MeasureArgs { limit, backend, date }).map(drop)
        }
        Command::Analyze(args) => commands::analyze::run(&cli.config, args),
        Command::Diff(args) => commands::diff::run(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
