use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod manifest;
mod output;
mod svg;

use commands::Command;
use config::Options;

/// Rating-norm analysis: target filtering, correlations, classification
/// with feature attribution, and clustering of rating distributions.
#[derive(Debug, Parser)]
#[command(name = "normlens", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Filter rated targets by corpus frequency and POS dominance
    Filter(Options),
    /// Rank-correlate mean ratings with every characteristic
    Correlate(Options),
    /// Cross-validated random forest accuracy per condition
    Classify(Options),
    /// Shapley values and permutation importance on a held-out fold
    Explain(Options),
    /// k-means over mid-scale rating distributions
    Cluster(Options),
    /// Mean vs SD table and plot, optionally coloured by a characteristic
    Croissant(Options),
    /// Run every stage and write a markdown summary
    Report(Options),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Cmd::Filter(o) => (Command::Filter, o),
        Cmd::Correlate(o) => (Command::Correlate, o),
        Cmd::Classify(o) => (Command::Classify, o),
        Cmd::Explain(o) => (Command::Explain, o),
        Cmd::Cluster(o) => (Command::Cluster, o),
        Cmd::Croissant(o) => (Command::Croissant, o),
        Cmd::Report(o) => (Command::Report, o),
    };
    match commands::run(command, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("normlens {}: error: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
