use std::path::PathBuf;

use clap::Args;
use fusetrack::pipeline::FusionConfig;
use fusetrack::sim::default_scenario;

use crate::config::{to_toml, write_text};
use crate::error::CliResult;

#[derive(Debug, Args)]
pub struct DefaultsArgs {
    #[arg(long)]
    pub out: PathBuf,
}

/// Writes the built-in scenario and fusion configs as editable TOML.
pub fn run(args: &DefaultsArgs) -> CliResult<()> {
    write_text(
        &args.out.join("scenario.toml"),
        &to_toml(&default_scenario())?,
    )?;
    write_text(
        &args.out.join("fusion.toml"),
        &to_toml(&FusionConfig::default())?,
    )
}
