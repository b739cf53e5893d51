use std::path::PathBuf;

use clap::Args;

use crate::config::load_scenario;
use crate::error::CliResult;
use crate::files::{write_ground_truth, write_measurements};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario TOML; the built-in default scenario when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario's rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let mut sc = load_scenario(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        sc.rng_seed = seed;
    }
    let sim = sc.simulate()?;
    write_ground_truth(&args.out.join("gt.csv"), &sim.ground_truth)?;
    write_measurements(&args.out.join("radar.csv"), &sim.radar)?;
    write_measurements(&args.out.join("rf.csv"), &sim.rf.fixes)?;

    let mut m = RunManifest::new("simulate", &args.out);
    m.config_path = args.config.clone();
    m.rng_seed = Some(sc.rng_seed);
    m.config = serde_json::to_value(&sc)?;
    m.options.insert("rf_attempts", sim.rf.attempts.into());
    m.options.insert("rf_dropouts", sim.rf.dropouts.into());
    m.options.insert("rf_outliers", sim.rf.outliers.into());
    m.options
        .insert("rf_solver_failures", sim.rf.solver_failures.into());
    m.write()
}
