//! TOML config files. Unknown keys and schema-version mismatches are errors.

use std::fs;
use std::path::Path;

use fusetrack::pipeline::FusionConfig;
use fusetrack::sim::{default_scenario, SensorScenario};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: Option<&Path>) -> CliResult<SensorScenario> {
    let sc = match path {
        Some(p) => load::<SensorScenario>(p)?,
        None => default_scenario(),
    };
    sc.validate()?;
    Ok(sc)
}

pub fn load_fusion(path: Option<&Path>) -> CliResult<FusionConfig> {
    let cfg = match path {
        Some(p) => load::<FusionConfig>(p)?,
        None => FusionConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn to_toml<T: Serialize>(value: &T) -> CliResult<String> {
    toml::to_string(value).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
