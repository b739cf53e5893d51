//! Planar TDOA multilateration by Gauss-Newton.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::geo::EnuPosition;
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const MAX_ITERATIONS: usize = 50;
const STEP_TOLERANCE_M: f64 = 1e-9;

/// Arrival-time difference `t[a] - t[b]` for the sensor pair `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdoaObservation {
    pub sensor_pair: (usize, usize),
    pub delta_t: f64,
}

/// Solve for the horizontal emitter position from arrival-time differences.
///
/// Minimizes the hyperbolic residuals
/// `c dt - (|p - s_a| - |p - s_b|)` over `p` in the horizontal plane,
/// starting from the centroid of the sensors involved. Iteration stops when
/// the full Gauss-Newton step is shorter than 1e-9 m.
pub fn tdoa_localize(sensors: &[EnuPosition], obs: &[TdoaObservation]) -> Result<Vector2<f64>> {
    if obs.len() < 2 {
        return Err(Error::InputDomain(format!(
            "need at least 2 TDOA observations, got {}",
            obs.len()
        )));
    }
    let mut used = Vec::new();
    for o in obs {
        let (a, b) = o.sensor_pair;
        if a == b || a >= sensors.len() || b >= sensors.len() {
            return Err(Error::InputDomain(format!(
                "invalid sensor pair ({a}, {b}) for {} sensors",
                sensors.len()
            )));
        }
        if !o.delta_t.is_finite() {
            return Err(Error::InputDomain(
                "non-finite arrival-time difference".into(),
            ));
        }
        for i in [a, b] {
            if !used.contains(&i) {
                used.push(i);
            }
        }
    }
    let pts: Vec<Vector2<f64>> = used
        .iter()
        .map(|&i| Vector2::new(sensors[i].east_m, sensors[i].north_m))
        .collect();
    check_geometry(&pts)?;

    let pos = |i: usize| Vector2::new(sensors[i].east_m, sensors[i].north_m);
    let ranges: Vec<f64> = obs.iter().map(|o| SPEED_OF_LIGHT * o.delta_t).collect();
    let cost = |p: &Vector2<f64>| -> f64 {
        obs.iter()
            .zip(&ranges)
            .map(|(o, d)| {
                let (a, b) = o.sensor_pair;
                let r = d - ((p - pos(a)).norm() - (p - pos(b)).norm());
                r * r
            })
            .sum()
    };

    let mut p = pts.iter().sum::<Vector2<f64>>() / pts.len() as f64;
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (o, d) in obs.iter().zip(&ranges) {
            let (a, b) = o.sensor_pair;
            let (va, vb) = (p - pos(a), p - pos(b));
            let (na, nb) = (va.norm(), vb.norm());
            let r = d - (na - nb);
            // d r / d p = -(unit(p - s_a) - unit(p - s_b))
            let g = -(unit(va, na) - unit(vb, nb));
            jtj += g * g.transpose();
            jtr += g * r;
        }
        let step = match jtj.try_inverse() {
            Some(inv) => -(inv * jtr),
            None => return Err(Error::Geometry("TDOA normal equations are singular".into())),
        };
        last_step = step.norm();
        if !last_step.is_finite() {
            break;
        }
        if last_step < STEP_TOLERANCE_M {
            return Ok(p + step);
        }
        // Backtrack until the cost does not increase.
        let c0 = cost(&p);
        let mut scale = 1.0;
        let mut next = p + step;
        while cost(&next) > c0 * (1.0 + 1e-12) && scale > 1e-6 {
            scale *= 0.5;
            next = p + step * scale;
        }
        p = next;
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        last_step,
    })
}

fn unit(v: Vector2<f64>, n: f64) -> Vector2<f64> {
    if n > 1e-12 {
        v / n
    } else {
        Vector2::zeros()
    }
}

fn check_geometry(pts: &[Vector2<f64>]) -> Result<()> {
    if pts.len() < 3 {
        return Err(Error::Geometry(format!(
            "planar TDOA needs at least 3 distinct sensors, got {}",
            pts.len()
        )));
    }
    let c = pts.iter().sum::<Vector2<f64>>() / pts.len() as f64;
    let scatter = pts.iter().fold(Matrix2::zeros(), |acc, p| {
        acc + (p - c) * (p - c).transpose()
    });
    let eig = scatter.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= 1e-10 * hi {
        return Err(Error::Geometry("sensors are collinear".into()));
    }
    Ok(())
}
