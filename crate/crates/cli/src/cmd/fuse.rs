use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fusetrack::pipeline::{run_fusion_mode, EntryKind, FusionMode, RunReport};
use serde::Serialize;

use crate::config::{load_fusion, write_json};
use crate::error::{CliError, CliResult};
use crate::files::{read_measurements, write_track};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fused,
    RadarOnly,
    RfOnly,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Fused => "fused",
            Mode::RadarOnly => "radar-only",
            Mode::RfOnly => "rf-only",
        }
    }
}

impl From<Mode> for FusionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Fused => FusionMode::Fused,
            Mode::RadarOnly => FusionMode::RadarOnly,
            Mode::RfOnly => FusionMode::RfOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub radar: Option<PathBuf>,
    #[arg(long)]
    pub rf: Option<PathBuf>,
    /// Fusion TOML; the defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Fused)]
    pub mode: Mode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct FuseReport {
    mode: Mode,
    entries: usize,
    updated: usize,
    coasted: usize,
    /// First and last track timestamps.
    span_s: Option<(f64, f64)>,
    counts: RunReport,
}

pub fn run(args: &FuseArgs) -> CliResult<()> {
    let cfg = load_fusion(args.config.as_deref())?;
    let mut m = RunManifest::new("fuse", &args.out);
    m.config_path = args.config.clone();

    let (want_radar, want_rf) = match args.mode {
        Mode::Fused => (true, true),
        Mode::RadarOnly => (true, false),
        Mode::RfOnly => (false, true),
    };
    let missing =
        |name: &str| CliError::Input(format!("--mode {} needs --{name}", args.mode.as_str()));
    if args.mode != Mode::Fused
        && ((want_radar && args.radar.is_none()) || (want_rf && args.rf.is_none()))
    {
        return Err(missing(if want_radar { "radar" } else { "rf" }));
    }
    if args.radar.is_none() && args.rf.is_none() {
        return Err(CliError::Input("fuse needs --radar, --rf or both".into()));
    }
    // A stream the mode ignores is not even opened.
    let mut read = |name: &'static str, path: &Option<PathBuf>, wanted: bool| match path {
        Some(p) if wanted => {
            m.inputs.insert(name, p.clone());
            read_measurements(p)
        }
        _ => Ok(Vec::new()),
    };
    let radar = read("radar", &args.radar, want_radar)?;
    let rf = read("rf", &args.rf, want_rf)?;

    let out = run_fusion_mode(&radar, &rf, &cfg, args.mode.into())?;
    write_track(&args.out.join("track.csv"), &out.track)?;
    let entries = &out.track.entries;
    let report = FuseReport {
        mode: args.mode,
        entries: entries.len(),
        updated: out.track.count(EntryKind::Updated),
        coasted: out.track.count(EntryKind::Coasted),
        span_s: entries
            .first()
            .zip(entries.last())
            .map(|(a, b)| (a.timestamp, b.timestamp)),
        counts: out.report,
    };
    write_json(&args.out.join("report.json"), &report)?;
    m.config = serde_json::to_value(&cfg)?;
    m.options.insert("mode", serde_json::to_value(args.mode)?);
    m.write()
}
