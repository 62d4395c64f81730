//! Benchmark and utility CLI for windowed additive regression.

mod asymptotics_cmd;
mod common;
mod fit_cmd;
mod select_cmd;
mod simulate_cmd;

use anyhow::Result;
use clap::{Parser, Subcommand};
use common::{build_options, FileConfig};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "ladd",
    version,
    about = "Windowed additive regression: fitting, smoothing-parameter \
             selection, asymptotic oracles, and simulation benchmarks"
)]
struct Cli {
    /// Kernel: epanechnikov, quartic, or tgauss (overrides the config file).
    #[arg(long, global = true)]
    kernel: Option<String>,
    /// TOML config with optional keys kernel, grid_points, tol, max_iter,
    /// n_min.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the estimator at evaluation points and write predictions.
    Fit(fit_cmd::FitArgs),
    /// Search a smoothing-parameter grid with an information criterion.
    Select(select_cmd::SelectArgs),
    /// Print closed-form bias/variance coefficients and optimal parameters.
    Asymptotics(asymptotics_cmd::AsymptoticsArgs),
    /// Run a named benchmark scenario and write JSON/CSV reports.
    Simulate(simulate_cmd::SimulateArgs),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = FileConfig::load(cli.config.as_deref())?;
    let opts = build_options(cli.kernel.as_deref(), &config)?;
    match &cli.command {
        Command::Fit(args) => fit_cmd::run(args, opts),
        Command::Select(args) => select_cmd::run(args, opts),
        Command::Asymptotics(args) => asymptotics_cmd::run(args, opts),
        Command::Simulate(args) => simulate_cmd::run(args, opts),
    }
}
