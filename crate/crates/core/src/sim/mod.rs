//! Synthetic scenarios: waypoint ground truth, radar fixes with polar noise
//! and RF fixes obtained by TDOA multilateration.
//!
//! Every random draw comes from a ChaCha stream derived from the scenario
//! seed, one stream per sensor, so output is reproducible across platforms.

mod matched;
mod radar;
mod rf;
mod tdoa;
mod trajectory;

pub use matched::{simulate_matched, MatchedRun, MatchedScenario};
pub use radar::simulate_radar;
pub use rf::{simulate_rf_fixes, tdoa_observations, RfSimulation};
pub use tdoa::{tdoa_localize, TdoaObservation, SPEED_OF_LIGHT};
pub use trajectory::{generate_waypoint_trajectory, WaypointPath};

use rand::rngs::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::calib::GroundTruthSample;
use crate::geo::EnuPosition;
use crate::pipeline::Measurement;
use crate::{Error, Result};

pub type SimRng = ChaCha8Rng;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarSensorConfig {
    pub origin: EnuPosition,
    pub interval_s: f64,
    pub range_sigma_m: f64,
    pub az_sigma_deg: f64,
    pub el_sigma_deg: f64,
    /// No detections beyond this range.
    pub max_range_m: f64,
    /// Range beyond which all noise sigmas are multiplied by `degradation_factor`.
    pub degradation_breakpoint_m: f64,
    pub degradation_factor: f64,
    /// Give every excursion beyond the breakpoint its own track id.
    pub fragment_beyond_breakpoint: bool,
}

impl Default for RadarSensorConfig {
    fn default() -> Self {
        Self {
            origin: EnuPosition::ORIGIN,
            interval_s: 0.25,
            range_sigma_m: 2.0,
            az_sigma_deg: 1.75,
            el_sigma_deg: 1.75,
            max_range_m: 3000.0,
            degradation_breakpoint_m: 800.0,
            degradation_factor: 3.0,
            fragment_beyond_breakpoint: false,
        }
    }
}

/// Axis-aligned horizontal box with its own dropout probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropoutRegion {
    pub east_min_m: f64,
    pub east_max_m: f64,
    pub north_min_m: f64,
    pub north_max_m: f64,
    pub dropout_prob: f64,
}

impl DropoutRegion {
    pub fn contains(&self, east: f64, north: f64) -> bool {
        (self.east_min_m..=self.east_max_m).contains(&east)
            && (self.north_min_m..=self.north_max_m).contains(&north)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfSensorConfig {
    pub sensor_positions: Vec<EnuPosition>,
    pub interval_s: f64,
    /// Standard deviation of each arrival-time difference.
    pub timing_sigma_s: f64,
    pub outlier_prob: f64,
    /// Outlier offsets are log-uniform in `[scale, 5 scale]`.
    pub outlier_scale_m: f64,
    pub dropout_prob: f64,
    /// First matching region overrides `dropout_prob`.
    pub dropout_regions: Vec<DropoutRegion>,
}

impl Default for RfSensorConfig {
    fn default() -> Self {
        Self {
            sensor_positions: Vec::new(),
            interval_s: 3.88,
            timing_sigma_s: 110e-9,
            outlier_prob: 0.05,
            outlier_scale_m: 1000.0,
            dropout_prob: 0.05,
            dropout_regions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorScenario {
    pub schema_version: u32,
    pub waypoints: Vec<EnuPosition>,
    pub speed_mps: f64,
    pub gt_rate_hz: f64,
    pub radar: RadarSensorConfig,
    pub rf: RfSensorConfig,
    pub rng_seed: u64,
}

impl Default for SensorScenario {
    fn default() -> Self {
        default_scenario()
    }
}

/// Field layout modelled on a small rural test range: radar on a mast in the
/// south-west corner next to one RF tower, three more RF towers spread to the
/// east and north (one about 1.1 km beyond the others), and a closed waypoint
/// loop whose northern leg runs well past the radar's 800 m breakpoint.
pub fn default_scenario() -> SensorScenario {
    let p = EnuPosition::new;
    SensorScenario {
        schema_version: SCENARIO_SCHEMA_VERSION,
        waypoints: vec![
            p(100.0, 150.0, 30.0),
            p(600.0, 100.0, 50.0),
            p(620.0, 400.0, 60.0),
            p(100.0, 600.0, 60.0),
            p(150.0, 980.0, 60.0),
            p(420.0, 980.0, 60.0),
            p(450.0, 600.0, 60.0),
            p(240.0, 400.0, 50.0),
            p(100.0, 150.0, 30.0),
        ],
        speed_mps: 6.0,
        gt_rate_hz: 10.0,
        radar: RadarSensorConfig {
            origin: EnuPosition::ORIGIN,
            ..RadarSensorConfig::default()
        },
        rf: RfSensorConfig {
            sensor_positions: vec![
                p(-50.0, -20.0, 0.0),
                p(720.0, 20.0, 0.0),
                p(650.0, 1150.0, 0.0),
                p(-20.0, 1100.0, 0.0),
            ],
            ..RfSensorConfig::default()
        },
        rng_seed: 1,
    }
}

impl SensorScenario {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return err(format!(
                "schema_version {} is not supported (expected {SCENARIO_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.waypoints.len() < 2 {
            return err(format!(
                "waypoints: need at least 2, got {}",
                self.waypoints.len()
            ));
        }
        if !(self.speed_mps > 0.0) {
            return err(format!(
                "speed_mps must be positive, got {}",
                self.speed_mps
            ));
        }
        if !(self.gt_rate_hz > 0.0) {
            return err(format!(
                "gt_rate_hz must be positive, got {}",
                self.gt_rate_hz
            ));
        }
        let r = &self.radar;
        if !(r.interval_s > 0.0) {
            return err(format!(
                "radar.interval_s must be positive, got {}",
                r.interval_s
            ));
        }
        for (name, v) in [
            ("radar.range_sigma_m", r.range_sigma_m),
            ("radar.az_sigma_deg", r.az_sigma_deg),
            ("radar.el_sigma_deg", r.el_sigma_deg),
        ] {
            if !(v >= 0.0) {
                return err(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(r.max_range_m > 0.0)
            || !(r.degradation_breakpoint_m > 0.0)
            || !(r.degradation_factor > 0.0)
        {
            return err("radar ranges and degradation_factor must be positive".into());
        }
        let f = &self.rf;
        if f.sensor_positions.len() < 3 {
            return err(format!(
                "rf.sensor_positions: need at least 3 sensors, got {}",
                f.sensor_positions.len()
            ));
        }
        if !(f.interval_s > 0.0) {
            return err(format!(
                "rf.interval_s must be positive, got {}",
                f.interval_s
            ));
        }
        if !(f.timing_sigma_s >= 0.0) || !(f.outlier_scale_m >= 0.0) {
            return err("rf.timing_sigma_s and rf.outlier_scale_m must be non-negative".into());
        }
        let probs = std::iter::once(("rf.outlier_prob", f.outlier_prob))
            .chain(std::iter::once(("rf.dropout_prob", f.dropout_prob)))
            .chain(
                f.dropout_regions
                    .iter()
                    .map(|d| ("rf.dropout_regions.dropout_prob", d.dropout_prob)),
            );
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// Ground truth plus both sensor streams, each drawn from its own
    /// seed-derived random stream.
    pub fn simulate(&self) -> Result<Simulation> {
        self.validate()?;
        let ground_truth = generate_waypoint_trajectory(self)?;
        let radar = simulate_radar(&ground_truth, self, &mut self.rng(Stream::Radar))?;
        let rf = simulate_rf_fixes(&ground_truth, self, &mut self.rng(Stream::Rf))?;
        Ok(Simulation {
            ground_truth,
            radar,
            rf,
        })
    }

    pub fn rng(&self, stream: Stream) -> SimRng {
        derive_rng(self.rng_seed, stream)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Radar,
    Rf,
    Matched,
}

pub fn derive_rng(seed: u64, stream: Stream) -> SimRng {
    let salt: u64 = match stream {
        Stream::Radar => 0x7261_6461_7200_0001,
        Stream::Rf => 0x7266_0000_0000_0002,
        Stream::Matched => 0x6d61_7463_6800_0003,
    };
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub ground_truth: Vec<GroundTruthSample>,
    pub radar: Vec<Measurement>,
    pub rf: RfSimulation,
}
