//! `fusetrack`: simulate, calibrate, fuse and evaluate radar/TDOA tracks.

mod cmd;
mod config;
mod error;
mod files;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fusetrack", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate ground truth, radar fixes and RF fixes from a scenario.
    Simulate(cmd::simulate::SimulateArgs),
    /// Estimate measurement covariances from fixes and ground truth.
    Calibrate(cmd::calibrate::CalibrateArgs),
    /// Run the Kalman fusion pipeline.
    Fuse(cmd::fuse::FuseArgs),
    /// Score a track or measurement file against ground truth.
    Evaluate(cmd::evaluate::EvaluateArgs),
    /// Convert a geodetic CSV into the local ENU schema.
    Adapt(cmd::adapt::AdaptArgs),
    /// Write the built-in scenario and fusion configs.
    Defaults(cmd::defaults::DefaultsArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Calibrate(a) => cmd::calibrate::run(a),
        Command::Fuse(a) => cmd::fuse::run(a),
        Command::Evaluate(a) => cmd::evaluate::run(a),
        Command::Adapt(a) => cmd::adapt::run(a),
        Command::Defaults(a) => cmd::defaults::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
