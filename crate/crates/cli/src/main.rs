//! `pbpk-ipinn`: simulate, fit and compare the four-compartment brain model.

mod common;
mod estimate;
mod report;
mod simulate;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pbpk-ipinn", version, about = "Brain PBPK simulation and parameter estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset from the reference parameters.
    Simulate(simulate::SimulateArgs),
    /// Estimate parameters with a physics-informed network.
    Train(estimate::TrainArgs),
    /// Estimate parameters with differential evolution.
    FitDe(estimate::FitDeArgs),
    /// Train a grid of network shapes and activations.
    Sweep(sweep::SweepArgs),
    /// AUC, Cmax, Tmax and half-life per compartment.
    Metrics(report::MetricsArgs),
    /// Side-by-side table and overlay plots of several results.
    Compare(report::CompareArgs),
}

/// Output directory shared by every subcommand.
#[derive(Args, Clone)]
pub struct OutDir {
    /// Directory for the written files (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Train(a) => estimate::run_train(a),
        Command::FitDe(a) => estimate::run_fit_de(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Metrics(a) => report::run_metrics(a),
        Command::Compare(a) => report::run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
