use nalgebra::Vector3;

use super::SensorScenario;
use crate::calib::GroundTruthSample;
use crate::geo::EnuPosition;
use crate::{Error, Result};

/// Piecewise-linear path flown at constant speed.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPath {
    points: Vec<Vector3<f64>>,
    /// Time at which each waypoint is reached.
    times: Vec<f64>,
}

impl WaypointPath {
    pub fn new(waypoints: &[EnuPosition], speed_mps: f64) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InputDomain(format!(
                "need at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        if !(speed_mps > 0.0 && speed_mps.is_finite()) {
            return Err(Error::InputDomain(format!(
                "speed must be positive, got {speed_mps}"
            )));
        }
        let points: Vec<_> = waypoints.iter().map(|w| w.to_vector()).collect();
        let mut times = Vec::with_capacity(points.len());
        let mut arc = 0.0;
        times.push(0.0);
        for (i, w) in points.windows(2).enumerate() {
            let len = (w[1] - w[0]).norm();
            if len < 1e-9 {
                return Err(Error::InputDomain(format!(
                    "waypoints {i} and {} coincide (degenerate segment)",
                    i + 1
                )));
            }
            arc += len;
            times.push(arc / speed_mps);
        }
        Ok(Self { points, times })
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("at least two waypoints")
    }

    /// Times at which each waypoint is reached.
    pub fn waypoint_times(&self) -> &[f64] {
        &self.times
    }

    /// Position at `t`, clamped to the path ends.
    pub fn position_at(&self, t: f64) -> Vector3<f64> {
        if t <= 0.0 {
            return self.points[0];
        }
        let seg = self.times.partition_point(|&w| w <= t);
        if seg >= self.times.len() {
            return *self.points.last().expect("non-empty");
        }
        let (t0, t1) = (self.times[seg - 1], self.times[seg]);
        let (a, b) = (self.points[seg - 1], self.points[seg]);
        a + (b - a) * ((t - t0) / (t1 - t0))
    }

    /// Samples at `rate_hz` from 0 to the end of the path, always including
    /// the final waypoint.
    pub fn sample(&self, rate_hz: f64) -> Vec<GroundTruthSample> {
        let end = self.duration();
        let n = (end * rate_hz + 1e-9).floor() as usize;
        let mut out: Vec<GroundTruthSample> = (0..=n)
            .map(|i| i as f64 / rate_hz)
            .map(|t| GroundTruthSample::new(t, EnuPosition::from_vector(&self.position_at(t))))
            .collect();
        let last_t = out.last().map_or(0.0, |s| s.timestamp);
        if end - last_t > 1e-9 {
            out.push(GroundTruthSample::new(
                end,
                EnuPosition::from_vector(self.points.last().expect("non-empty")),
            ));
        }
        out
    }
}

pub fn generate_waypoint_trajectory(sc: &SensorScenario) -> Result<Vec<GroundTruthSample>> {
    if !(sc.gt_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "gt_rate_hz must be positive, got {}",
            sc.gt_rate_hz
        )));
    }
    Ok(WaypointPath::new(&sc.waypoints, sc.speed_mps)?.sample(sc.gt_rate_hz))
}
