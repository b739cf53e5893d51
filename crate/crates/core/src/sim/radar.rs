use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::SensorScenario;
use crate::calib::{truth_at, validate_ground_truth, GroundTruthSample};
use crate::pipeline::Measurement;
use crate::Result;

/// Radar fixes with Gaussian noise on range, azimuth and elevation about the
/// radar origin, converted back to ENU.
///
/// Azimuth is measured clockwise from north. Beyond the degradation
/// breakpoint every sigma is multiplied by the degradation factor. Samples
/// at the radar origin (undefined angles) or beyond `max_range_m` are skipped.
pub fn simulate_radar<R: Rng + ?Sized>(
    gt: &[GroundTruthSample],
    sc: &SensorScenario,
    rng: &mut R,
) -> Result<Vec<Measurement>> {
    validate_ground_truth(gt)?;
    let cfg = &sc.radar;
    let origin = cfg.origin.to_vector();
    let (start, end) = (gt[0].timestamp, gt[gt.len() - 1].timestamp);
    let n = ((end - start) / cfg.interval_s + 1e-9).floor() as usize;

    let mut out = Vec::with_capacity(n + 1);
    let mut last_id = 1u32;
    let mut in_far_excursion = false;
    for k in 0..=n {
        let t = start + k as f64 * cfg.interval_s;
        let d = truth_at(gt, t)? - origin;
        let range = d.norm();
        if range < 1e-9 || range > cfg.max_range_m {
            continue;
        }
        let far = range > cfg.degradation_breakpoint_m;
        let id = if cfg.fragment_beyond_breakpoint && far {
            if !in_far_excursion {
                last_id += 1;
                in_far_excursion = true;
            }
            last_id
        } else {
            in_far_excursion = false;
            1
        };
        let factor = if far { cfg.degradation_factor } else { 1.0 };
        let az = d.x.atan2(d.y);
        let el = (d.z / range).clamp(-1.0, 1.0).asin();

        let r_noisy = range + gaussian(rng, cfg.range_sigma_m * factor);
        let az_noisy = az + gaussian(rng, cfg.az_sigma_deg.to_radians() * factor);
        let el_noisy = el + gaussian(rng, cfg.el_sigma_deg.to_radians() * factor);

        let horizontal = r_noisy * el_noisy.cos();
        let p = origin
            + Vector3::new(
                horizontal * az_noisy.sin(),
                horizontal * az_noisy.cos(),
                r_noisy * el_noisy.sin(),
            );
        out.push(Measurement::radar(t, p, Some(id)));
    }
    Ok(out)
}

/// One zero-mean normal draw; consumes randomness even when `sigma` is zero
/// so that streams stay aligned across configurations.
pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
    z * sigma
}
