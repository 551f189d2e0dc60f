use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use palm_cli::Command;

#[derive(Parser)]
#[command(name = "palmgb", version, about = "Generalized Bayesian inference for spatial point patterns with the Palm likelihood")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Paths {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate replicate patterns from the configured truth.
    Simulate(Paths),
    /// Fit an observed pattern.
    Fit(Paths),
    /// Simulate, fit and calibrate replicates and tabulate bias, RMSE and coverage.
    Study(Paths),
    /// Compare effective sample size per second across fits on one pattern.
    EssBench(Paths),
    /// Recalibrate a stored GPC fit.
    Calibrate(Paths),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, paths) = match cli.command {
        Cmd::Simulate(p) => (Command::Simulate, p),
        Cmd::Fit(p) => (Command::Fit, p),
        Cmd::Study(p) => (Command::Study, p),
        Cmd::EssBench(p) => (Command::EssBench, p),
        Cmd::Calibrate(p) => (Command::Calibrate, p),
    };
    match palm_cli::execute(command, &paths.config, &paths.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
