//! Truth and measurements drawn from exactly the model the filter assumes:
//! piecewise-constant white acceleration between measurement times and
//! Cartesian Gaussian measurement noise with the configured covariances.
//! Used to check filter consistency (NIS acceptance rates, NEES).

use nalgebra::{Cholesky, Vector2, Vector3, Vector6};
use rand::Rng;

use super::radar::gaussian;
use super::{derive_rng, SensorScenario, Stream, WaypointPath};
use crate::model::{cv_transition, NoiseConfig};
use crate::pipeline::Measurement;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedScenario {
    pub duration_s: f64,
    pub radar_interval_s: f64,
    /// `None` disables the RF stream.
    pub rf_interval_s: Option<f64>,
    pub noise: NoiseConfig,
    pub initial_position: Vector3<f64>,
    pub initial_velocity: Vector3<f64>,
}

impl MatchedScenario {
    /// Same duration, cadences and starting kinematics as a waypoint scenario.
    pub fn from_scenario(sc: &SensorScenario, noise: &NoiseConfig) -> Result<Self> {
        let path = WaypointPath::new(&sc.waypoints, sc.speed_mps)?;
        let start = sc.waypoints[0].to_vector();
        let heading = (sc.waypoints[1].to_vector() - start).normalize();
        Ok(Self {
            duration_s: path.duration(),
            radar_interval_s: sc.radar.interval_s,
            rf_interval_s: Some(sc.rf.interval_s),
            noise: noise.clone(),
            initial_position: start,
            initial_velocity: heading * sc.speed_mps,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedRun {
    /// True state at every measurement time, ascending.
    pub truth: Vec<(f64, Vector6<f64>)>,
    pub radar: Vec<Measurement>,
    pub rf: Vec<Measurement>,
}

impl MatchedRun {
    pub fn truth_at(&self, t: f64) -> Option<Vector6<f64>> {
        let i = self.truth.partition_point(|(ts, _)| *ts < t);
        self.truth
            .get(i)
            .filter(|(ts, _)| *ts == t)
            .map(|(_, s)| *s)
    }
}

pub fn simulate_matched(sc: &MatchedScenario, seed: u64) -> Result<MatchedRun> {
    sc.noise.validate()?;
    if !(sc.duration_s > 0.0 && sc.radar_interval_s > 0.0)
        || sc.rf_interval_s.is_some_and(|v| !(v > 0.0))
    {
        return Err(Error::Config(
            "matched scenario durations and intervals must be positive".into(),
        ));
    }
    let mut rng = derive_rng(seed, Stream::Matched);
    let radar_chol =
        Cholesky::new(sc.noise.r_radar).ok_or_else(|| Error::Config("r_radar not SPD".into()))?;
    let rf_chol =
        Cholesky::new(sc.noise.r_rf).ok_or_else(|| Error::Config("r_rf not SPD".into()))?;

    let grid = |interval: f64| {
        let n = (sc.duration_s / interval + 1e-9).floor() as usize;
        (0..=n).map(move |k| k as f64 * interval)
    };
    // (time, is_radar); radar first on ties, as in the pipeline
    let mut times: Vec<(f64, bool)> = grid(sc.radar_interval_s).map(|t| (t, true)).collect();
    if let Some(rf_dt) = sc.rf_interval_s {
        times.extend(grid(rf_dt).map(|t| (t, false)));
    }
    times.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));

    let sigma = sc.noise.sigma_a;
    let mut x = Vector6::new(
        sc.initial_position.x,
        sc.initial_position.y,
        sc.initial_position.z,
        sc.initial_velocity.x,
        sc.initial_velocity.y,
        sc.initial_velocity.z,
    );
    let mut last_t = 0.0;
    let mut run = MatchedRun {
        truth: Vec::new(),
        radar: Vec::new(),
        rf: Vec::new(),
    };
    for (t, is_radar) in times {
        let dt = t - last_t;
        if dt > 0.0 {
            x = propagate(&x, dt, sigma, &mut rng)?;
            last_t = t;
        }
        if run.truth.last().is_none_or(|(ts, _)| *ts < t) {
            run.truth.push((t, x));
        }
        if is_radar {
            let v = radar_chol.l()
                * Vector3::new(
                    gaussian(&mut rng, 1.0),
                    gaussian(&mut rng, 1.0),
                    gaussian(&mut rng, 1.0),
                );
            run.radar
                .push(Measurement::radar(t, x.fixed_rows::<3>(0) + v, Some(1)));
        } else {
            let v = rf_chol.l() * Vector2::new(gaussian(&mut rng, 1.0), gaussian(&mut rng, 1.0));
            run.rf.push(Measurement::rf(t, x[0] + v.x, x[1] + v.y));
        }
    }
    Ok(run)
}

/// One step of the discrete white-acceleration model: a single acceleration
/// draw held constant over `dt`.
fn propagate<R: Rng + ?Sized>(
    x: &Vector6<f64>,
    dt: f64,
    sigma_a: f64,
    rng: &mut R,
) -> Result<Vector6<f64>> {
    let f = cv_transition(dt)?;
    let mut next = f * x;
    for axis in 0..3 {
        let a = gaussian(rng, sigma_a);
        next[axis] += 0.5 * dt * dt * a;
        next[axis + 3] += dt * a;
    }
    Ok(next)
}
