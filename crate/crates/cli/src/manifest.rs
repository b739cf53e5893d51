use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::write_json;
use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a subcommand: written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub config_path: Option<PathBuf>,
    pub inputs: BTreeMap<&'static str, PathBuf>,
    pub output_dir: PathBuf,
    pub rng_seed: Option<u64>,
    pub tool_version: &'static str,
    /// The effective configuration after defaults and overrides.
    pub config: serde_json::Value,
    pub options: BTreeMap<&'static str, serde_json::Value>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, output_dir: &Path) -> Self {
        Self {
            subcommand,
            config_path: None,
            inputs: BTreeMap::new(),
            output_dir: output_dir.to_path_buf(),
            rng_seed: None,
            tool_version: env!("CARGO_PKG_VERSION"),
            config: serde_json::Value::Null,
            options: BTreeMap::new(),
        }
    }

    pub fn write(&self) -> CliResult<()> {
        write_json(&self.output_dir.join(MANIFEST_FILE), self)
    }
}
