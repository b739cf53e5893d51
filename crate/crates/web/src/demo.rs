//! Plain-Rust logic behind the browser demo, testable natively.

use fusetrack::geo::EnuPosition;
use fusetrack::metrics::{
    coverage, error_stats, ErrorReport, ScoredEstimate, ScoringMode, DEFAULT_COVERAGE_BIN_S,
};
use fusetrack::model::Modality;
use fusetrack::pipeline::{run_fusion_mode, EntryKind, FusionConfig, FusionMode, RunReport};
use fusetrack::sim::{default_scenario, tdoa_localize, tdoa_observations, SPEED_OF_LIGHT};
use nalgebra::{Matrix2, Vector2};
use rand::rngs::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    pub seed: u64,
    pub rf_outlier_prob: f64,
    pub rf_dropout_prob: f64,
    pub radar_max_range_m: f64,
    pub nis_gating: bool,
    pub mode: FusionMode,
}

impl Default for RunParams {
    fn default() -> Self {
        let sc = default_scenario();
        Self {
            seed: sc.rng_seed,
            rf_outlier_prob: sc.rf.outlier_prob,
            rf_dropout_prob: sc.rf.dropout_prob,
            radar_max_range_m: sc.radar.max_range_m,
            nis_gating: true,
            mode: FusionMode::Fused,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrackPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub coasted: bool,
}

#[derive(Debug, Serialize)]
pub struct Stats {
    pub mean_m: f64,
    pub max_m: f64,
    pub coverage_pct: f64,
}

impl From<&ErrorReport> for Stats {
    fn from(r: &ErrorReport) -> Self {
        Self {
            mean_m: r.mean_m,
            max_m: r.max_m,
            coverage_pct: r.coverage_pct,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub truth: Vec<[f64; 2]>,
    pub radar: Vec<[f64; 2]>,
    pub rf: Vec<[f64; 2]>,
    pub track: Vec<TrackPoint>,
    pub radar_origin: [f64; 2],
    pub rf_sensors: Vec<[f64; 2]>,
    pub radar_stats: Option<Stats>,
    pub rf_stats: Option<Stats>,
    pub fused_stats: Stats,
    pub fused_coverage_pct: f64,
    pub counts: RunReport,
}

fn xy(p: &EnuPosition) -> [f64; 2] {
    [p.east_m, p.north_m]
}

/// Simulate the default field layout with the given tweaks and fuse it.
pub fn run_scenario(params: &RunParams) -> fusetrack::Result<RunSummary> {
    let mut sc = default_scenario();
    sc.rng_seed = params.seed;
    sc.rf.outlier_prob = params.rf_outlier_prob;
    sc.rf.dropout_prob = params.rf_dropout_prob;
    sc.radar.max_range_m = params.radar_max_range_m;
    let sim = sc.simulate()?;
    let cfg = FusionConfig {
        nis_gating: params.nis_gating,
        coast_interval_s: None,
        ..FusionConfig::default()
    };
    let out = run_fusion_mode(&sim.radar, &sim.rf.fixes, &cfg, params.mode)?;

    let gt = &sim.ground_truth;
    let span = (gt[0].timestamp, gt[gt.len() - 1].timestamp);
    let score = |est: Vec<ScoredEstimate>| {
        error_stats(&est, gt, ScoringMode::Full3D, DEFAULT_COVERAGE_BIN_S).ok()
    };
    let fused =
        score(out.track.entries.iter().map(ScoredEstimate::from).collect()).ok_or_else(|| {
            fusetrack::Error::InsufficientData("fused track does not overlap the truth".into())
        })?;
    let ts: Vec<f64> = out.track.entries.iter().map(|e| e.timestamp).collect();
    Ok(RunSummary {
        truth: gt.iter().step_by(10).map(|g| xy(&g.position)).collect(),
        radar: sim.radar.iter().map(|m| m.horizontal().into()).collect(),
        rf: sim.rf.fixes.iter().map(|m| m.horizontal().into()).collect(),
        track: out
            .track
            .entries
            .iter()
            .map(|e| {
                let p = e.state.position();
                TrackPoint {
                    t: e.timestamp,
                    x: p.x,
                    y: p.y,
                    coasted: e.kind == EntryKind::Coasted,
                }
            })
            .collect(),
        radar_origin: xy(&sc.radar.origin),
        rf_sensors: sc.rf.sensor_positions.iter().map(xy).collect(),
        radar_stats: score(
            out.accepted(Modality::Radar)
                .map(ScoredEstimate::from)
                .collect(),
        )
        .as_ref()
        .map(Stats::from),
        rf_stats: score(
            out.accepted(Modality::Rf)
                .map(ScoredEstimate::from)
                .collect(),
        )
        .as_ref()
        .map(Stats::from),
        fused_stats: Stats::from(&fused),
        fused_coverage_pct: coverage(&ts, span, DEFAULT_COVERAGE_BIN_S)?,
        counts: out.report,
    })
}

#[derive(Debug, Serialize)]
pub struct GdopMap {
    pub nx: usize,
    pub ny: usize,
    /// `[east_min, east_max, north_min, north_max]`.
    pub extent: [f64; 4],
    /// Row-major from the south-west corner; predicted horizontal error
    /// (1-sigma, m), `null` where the geometry is singular.
    pub values: Vec<Option<f64>>,
}

/// Predicted horizontal TDOA error over a grid, from the linearized
/// geometry with independent timing noise on each difference.
pub fn tdoa_gdop_map(
    sensors: &[EnuPosition],
    timing_sigma_s: f64,
    extent: [f64; 4],
    nx: usize,
    ny: usize,
) -> GdopMap {
    let sigma_r = SPEED_OF_LIGHT * timing_sigma_s;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = extent[0] + (i as f64 + 0.5) * (extent[1] - extent[0]) / nx as f64;
            let y = extent[2] + (j as f64 + 0.5) * (extent[3] - extent[2]) / ny as f64;
            values.push(predicted_error(sensors, Vector2::new(x, y), sigma_r));
        }
    }
    GdopMap {
        nx,
        ny,
        extent,
        values,
    }
}

fn predicted_error(sensors: &[EnuPosition], p: Vector2<f64>, sigma_r: f64) -> Option<f64> {
    let unit = |s: &EnuPosition| (p - Vector2::new(s.east_m, s.north_m)).try_normalize(1e-9);
    let u0 = unit(sensors.first()?)?;
    let mut info = Matrix2::zeros();
    for s in &sensors[1..] {
        let row = unit(s)? - u0;
        info += row * row.transpose();
    }
    info.try_inverse()
        .map(|c| sigma_r * c.trace().max(0.0).sqrt())
        .filter(|v| v.is_finite())
}

#[derive(Debug, Serialize)]
pub struct Localization {
    pub estimate: Option<[f64; 2]>,
    pub error_m: Option<f64>,
    pub message: Option<String>,
}

/// Localize an emitter at `emitter` from noisy arrival-time differences.
pub fn localize_point(
    sensors: &[EnuPosition],
    emitter: [f64; 2],
    timing_sigma_s: f64,
    seed: u64,
) -> Localization {
    let truth = Vector2::from(emitter);
    let mut obs = tdoa_observations(sensors, truth);
    if timing_sigma_s > 0.0 {
        if let Ok(noise) = Normal::new(0.0, timing_sigma_s) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for o in &mut obs {
                o.delta_t += noise.sample(&mut rng);
            }
        }
    }
    match tdoa_localize(sensors, &obs) {
        Ok(p) => Localization {
            estimate: Some(p.into()),
            error_m: Some((p - truth).norm()),
            message: None,
        },
        Err(e) => Localization {
            estimate: None,
            error_m: None,
            message: Some(e.to_string()),
        },
    }
}

pub fn default_rf_sensors() -> Vec<EnuPosition> {
    default_scenario().rf.sensor_positions
}
