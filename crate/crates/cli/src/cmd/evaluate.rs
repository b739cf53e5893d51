use std::path::PathBuf;

use clap::Args;
use fusetrack::metrics::{
    empirical_cdf, error_stats, position_errors, ErrorReport, ScoringMode, DEFAULT_COVERAGE_BIN_S,
};
use serde::Serialize;

use crate::config::write_json;
use crate::error::{CliError, CliResult};
use crate::files::{read_estimates, read_ground_truth};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Track, measurement or ground-truth CSV to score.
    #[arg(long)]
    pub track: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Coverage bin width.
    #[arg(long, default_value_t = DEFAULT_COVERAGE_BIN_S)]
    pub bin_seconds: f64,
    /// Score every estimate by its horizontal error only.
    #[arg(long)]
    pub horizontal: bool,
}

#[derive(Debug, Serialize)]
pub struct EvaluationReport {
    pub scoring: ScoringMode,
    pub bin_seconds: f64,
    pub errors: ErrorReport,
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    if !(args.bin_seconds > 0.0 && args.bin_seconds.is_finite()) {
        return Err(CliError::Input(format!(
            "--bin-seconds must be positive, got {}",
            args.bin_seconds
        )));
    }
    let est = read_estimates(&args.track)?;
    let gt = read_ground_truth(&args.gt)?;
    let mode = if args.horizontal {
        ScoringMode::Horizontal2D
    } else {
        ScoringMode::Full3D
    };
    let errors = error_stats(&est, &gt, mode, args.bin_seconds)?;
    let (scored, _) = position_errors(&est, &gt, mode)?;
    let cdf = empirical_cdf(&scored.iter().map(|e| e.error_m).collect::<Vec<_>>())?;

    let report = EvaluationReport {
        scoring: mode,
        bin_seconds: args.bin_seconds,
        errors,
    };
    write_json(&args.out.join("report.json"), &report)?;
    let mut text = String::from("error_m,fraction\n");
    for (e, f) in cdf {
        text.push_str(&format!("{e},{f}\n"));
    }
    crate::config::write_text(&args.out.join("cdf.csv"), &text)?;

    let mut m = RunManifest::new("evaluate", &args.out);
    m.inputs.insert("track", args.track.clone());
    m.inputs.insert("gt", args.gt.clone());
    m.options.insert("bin_seconds", args.bin_seconds.into());
    m.options.insert("scoring", serde_json::to_value(mode)?);
    m.write()
}
