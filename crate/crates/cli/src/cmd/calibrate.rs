use std::path::PathBuf;

use clap::Args;
use fusetrack::calib::{estimate_measurement_covariance_with, CalibrationResult, CovarianceMethod};
use fusetrack::model::Modality;
use serde::Serialize;

use crate::config::{load_fusion, to_toml, write_json, write_text};
use crate::error::{CliError, CliResult};
use crate::files::{read_ground_truth, read_measurements};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub radar: Option<PathBuf>,
    #[arg(long)]
    pub rf: Option<PathBuf>,
    #[arg(long)]
    pub gt: PathBuf,
    /// Fusion config to start from; the defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Drop radar residuals beyond this many robust sigmas before estimating.
    #[arg(long)]
    pub radar_robust_k: Option<f64>,
    /// Drop RF residuals beyond this many robust sigmas before estimating.
    #[arg(long)]
    pub rf_robust_k: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ModalityReport {
    method: CovarianceMethod,
    /// Row-major estimated covariance, m^2.
    covariance: Vec<Vec<f64>>,
    /// Mean residual (measurement minus truth), m.
    bias: Vec<f64>,
    used: usize,
    excluded: usize,
    trimmed: usize,
    /// False when the estimate is not positive definite and the base
    /// config's matrix was kept.
    applied: bool,
}

#[derive(Debug, Default, Serialize)]
struct CalibrationReport {
    radar: Option<ModalityReport>,
    rf: Option<ModalityReport>,
}

fn method(k: Option<f64>) -> CovarianceMethod {
    k.map_or(CovarianceMethod::Sample, |k| CovarianceMethod::RobustMad {
        k,
    })
}

fn describe(cal: &CalibrationResult, method: CovarianceMethod, applied: bool) -> ModalityReport {
    let c = &cal.covariance;
    ModalityReport {
        method,
        covariance: (0..c.nrows())
            .map(|i| c.row(i).iter().copied().collect())
            .collect(),
        bias: cal.bias.iter().copied().collect(),
        used: cal.used,
        excluded: cal.excluded,
        trimmed: cal.trimmed,
        applied,
    }
}

pub fn run(args: &CalibrateArgs) -> CliResult<()> {
    if args.radar.is_none() && args.rf.is_none() {
        return Err(CliError::Input(
            "calibrate needs --radar, --rf or both".into(),
        ));
    }
    let mut cfg = load_fusion(args.config.as_deref())?;
    let gt = read_ground_truth(&args.gt)?;
    let mut report = CalibrationReport::default();
    let mut m = RunManifest::new("calibrate", &args.out);
    m.config_path = args.config.clone();
    m.inputs.insert("gt", args.gt.clone());

    for (modality, path, k) in [
        (Modality::Radar, &args.radar, args.radar_robust_k),
        (Modality::Rf, &args.rf, args.rf_robust_k),
    ] {
        let Some(path) = path else { continue };
        let ms: Vec<_> = read_measurements(path)?
            .into_iter()
            .filter(|x| x.modality == modality)
            .collect();
        let method = method(k);
        let cal = estimate_measurement_covariance_with(&ms, &gt, method)?;
        let applied = match cal.apply_to(&mut cfg.noise) {
            Ok(()) => true,
            Err(e) => {
                eprintln!("warning: {modality} covariance not applied: {e}");
                false
            }
        };
        let entry = Some(describe(&cal, method, applied));
        match modality {
            Modality::Radar => {
                report.radar = entry;
                m.inputs.insert("radar", path.clone());
            }
            Modality::Rf => {
                report.rf = entry;
                m.inputs.insert("rf", path.clone());
            }
        }
    }

    write_text(&args.out.join("fusion.toml"), &to_toml(&cfg)?)?;
    write_json(&args.out.join("calibration.json"), &report)?;
    m.config = serde_json::to_value(&cfg)?;
    m.options
        .insert("radar_robust_k", serde_json::to_value(args.radar_robust_k)?);
    m.options
        .insert("rf_robust_k", serde_json::to_value(args.rf_robust_k)?);
    m.write()
}
