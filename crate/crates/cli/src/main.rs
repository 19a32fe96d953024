//! `mmo`: equilibrium analysis, simulation, oscillation statistics,
//! normal-form diagnostics and parameter sweeps for the noisy
//! predator-prey model.

mod analyze;
mod args;
mod hist;
mod nf;
mod simulate;
mod sweep;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "mmo", version, about = "Mixed-mode oscillations in a noisy predator-prey model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibrium, Hopf data and Jacobian.
    Analyze(analyze::AnalyzeArgs),
    /// Write trajectories of the stochastic model.
    Simulate(simulate::SimulateArgs),
    /// Classify oscillations and summarize the SAO counts between outbreaks.
    Hist(hist::HistArgs),
    /// Normal-form constants and the repeated-outbreak probability.
    Nf(nf::NfArgs),
    /// Repeated-outbreak counts over a two-parameter grid.
    Sweep(sweep::SweepArgs),
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Analyze(a) => analyze::run(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Hist(a) => hist::run(&a),
        Command::Nf(a) => nf::run(&a),
        Command::Sweep(a) => sweep::run(&a),
    }
}
