//! `sentireduce`: term-presence feature selection for sentiment corpora.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::Overrides;

#[derive(Parser)]
#[command(name = "sentireduce", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write per-feature presence counts and weights to features.csv
    Inspect(Overrides),
    /// Select features at a fixed (k, λ), train, and report
    Select(Overrides),
    /// Tune (k, λ) by differential evolution, then report the best
    Evolve(Overrides),
    /// Run every dataset × classifier × method cell into one report
    Compare(Overrides),
    /// Average report rows per classifier and method across datasets
    Summarize {
        /// Report CSV files written by select, evolve or compare
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Directory for summary.csv; printed to stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SENTIREDUCE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .with_context(|| format!("SENTIREDUCE_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .context("cannot configure thread pool")
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Inspect(o) => commands::inspect(&o),
        Command::Select(o) => commands::select(&o),
        Command::Evolve(o) => commands::evolve(&o),
        Command::Compare(o) => commands::compare(&o),
        Command::Summarize { reports, out } => commands::summarize(&reports, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
