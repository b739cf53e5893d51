use nalgebra::Vector2;
use rand::{Rng, RngExt};

use super::radar::gaussian;
use super::tdoa::{tdoa_localize, TdoaObservation, SPEED_OF_LIGHT};
use super::SensorScenario;
use crate::calib::{truth_at, validate_ground_truth, GroundTruthSample};
use crate::geo::EnuPosition;
use crate::pipeline::Measurement;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RfSimulation {
    pub fixes: Vec<Measurement>,
    pub attempts: usize,
    pub dropouts: usize,
    /// Attempts whose TDOA solve failed; no fix is emitted for them.
    pub solver_failures: usize,
    pub outliers: usize,
}

/// Noiseless arrival-time differences of an emitter at horizontal position
/// `emitter`, each sensor relative to sensor 0.
pub fn tdoa_observations(sensors: &[EnuPosition], emitter: Vector2<f64>) -> Vec<TdoaObservation> {
    let dist = |s: &EnuPosition| (emitter - Vector2::new(s.east_m, s.north_m)).norm();
    let d0 = dist(&sensors[0]);
    sensors
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, s)| TdoaObservation {
            sensor_pair: (j, 0),
            delta_t: (dist(s) - d0) / SPEED_OF_LIGHT,
        })
        .collect()
}

/// RF position fixes from simulated TDOA multilateration.
///
/// Each attempt may drop out; otherwise the arrival-time differences get
/// Gaussian timing noise and are solved with [`tdoa_localize`]. With
/// probability `outlier_prob` the solved fix is replaced by truth plus an
/// offset in a uniform direction whose length is log-uniform in
/// `[outlier_scale_m, 5 outlier_scale_m]`.
pub fn simulate_rf_fixes<R: Rng + ?Sized>(
    gt: &[GroundTruthSample],
    sc: &SensorScenario,
    rng: &mut R,
) -> Result<RfSimulation> {
    validate_ground_truth(gt)?;
    let cfg = &sc.rf;
    let (start, end) = (gt[0].timestamp, gt[gt.len() - 1].timestamp);
    let n = ((end - start) / cfg.interval_s + 1e-9).floor() as usize;
    let mut sim = RfSimulation::default();

    for k in 0..=n {
        let t = start + k as f64 * cfg.interval_s;
        let truth = truth_at(gt, t)?;
        let horizontal = Vector2::new(truth.x, truth.y);
        sim.attempts += 1;

        let p_drop = cfg
            .dropout_regions
            .iter()
            .find(|r| r.contains(truth.x, truth.y))
            .map_or(cfg.dropout_prob, |r| r.dropout_prob);
        if rng.random::<f64>() < p_drop {
            sim.dropouts += 1;
            continue;
        }

        let mut obs = tdoa_observations(&cfg.sensor_positions, horizontal);
        for o in &mut obs {
            o.delta_t += gaussian(rng, cfg.timing_sigma_s);
        }
        let outlier = rng.random::<f64>() < cfg.outlier_prob;
        let fix = if outlier {
            sim.outliers += 1;
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            let length = cfg.outlier_scale_m * 5f64.powf(rng.random::<f64>());
            horizontal + Vector2::new(angle.cos(), angle.sin()) * length
        } else {
            match tdoa_localize(&cfg.sensor_positions, &obs) {
                Ok(p) => p,
                Err(_) => {
                    sim.solver_failures += 1;
                    continue;
                }
            }
        };
        sim.fixes.push(Measurement::rf(t, fix.x, fix.y));
    }
    Ok(sim)
}
