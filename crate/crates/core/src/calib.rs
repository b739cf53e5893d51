//! Ground-truth alignment and empirical measurement-noise covariances.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geo::EnuPosition;
use crate::model::{Modality, NoiseConfig};
use crate::pipeline::Measurement;
use crate::stats::median;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSample {
    pub timestamp: f64,
    pub position: EnuPosition,
}

impl GroundTruthSample {
    pub fn new(timestamp: f64, position: EnuPosition) -> Self {
        Self {
            timestamp,
            position,
        }
    }
}

/// Checks that `gt` can be interpolated: at least two samples with strictly
/// increasing timestamps.
pub fn validate_ground_truth(gt: &[GroundTruthSample]) -> Result<()> {
    if gt.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "ground truth needs at least 2 samples, got {}",
            gt.len()
        )));
    }
    for (i, w) in gt.windows(2).enumerate() {
        if !(w[1].timestamp > w[0].timestamp) {
            return Err(Error::Ordering(format!(
                "ground-truth timestamps must strictly increase (sample {} at {} s follows {} s)",
                i + 1,
                w[1].timestamp,
                w[0].timestamp
            )));
        }
    }
    Ok(())
}

/// Truth position at `t` by linear interpolation between the bracketing
/// samples. Times outside the span are an error, never extrapolated.
pub fn align_ground_truth(gt: &[GroundTruthSample], t: f64) -> Result<EnuPosition> {
    if gt.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "ground truth needs at least 2 samples, got {}",
            gt.len()
        )));
    }
    let start = gt[0].timestamp;
    let end = gt[gt.len() - 1].timestamp;
    if !(t >= start && t <= end) {
        return Err(Error::OutOfSpan { t, start, end });
    }
    // first sample with timestamp > t
    let hi = gt.partition_point(|s| s.timestamp <= t);
    if hi == 0 {
        return Ok(gt[0].position);
    }
    let lo = &gt[hi - 1];
    if lo.timestamp == t || hi == gt.len() {
        return Ok(lo.position);
    }
    let up = &gt[hi];
    let w = (t - lo.timestamp) / (up.timestamp - lo.timestamp);
    let a = lo.position.to_vector();
    let b = up.position.to_vector();
    Ok(EnuPosition::from_vector(&(a + (b - a) * w)))
}

/// Measurement-minus-truth residuals for one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSet {
    pub modality: Modality,
    /// Each entry has `modality.dim()` components.
    pub residuals: Vec<DVector<f64>>,
    /// Measurements skipped because they fall outside the truth span.
    pub excluded: usize,
}

pub fn residuals(ms: &[Measurement], gt: &[GroundTruthSample]) -> Result<ResidualSet> {
    validate_ground_truth(gt)?;
    let modality = match ms.first() {
        Some(m) => m.modality,
        None => {
            return Err(Error::InsufficientData(
                "no measurements to calibrate".into(),
            ))
        }
    };
    let mut out = Vec::with_capacity(ms.len());
    let mut excluded = 0;
    for m in ms {
        if m.modality != modality {
            return Err(Error::InputDomain(
                "calibration series mixes radar and rf measurements".into(),
            ));
        }
        match align_ground_truth(gt, m.timestamp) {
            Ok(truth) => {
                let t = truth.to_vector();
                let z = m.observation();
                out.push(DVector::from_iterator(
                    z.len(),
                    z.iter().zip(t.iter()).map(|(a, b)| a - b),
                ));
            }
            Err(Error::OutOfSpan { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(ResidualSet {
        modality,
        residuals: out,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMethod {
    /// Plain sample covariance of all residuals.
    #[default]
    Sample,
    /// Drop residuals further than `k` robust sigmas (1.4826 x MAD) from the
    /// per-axis median on any axis, then take the sample covariance.
    RobustMad { k: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub modality: Modality,
    pub covariance: DMatrix<f64>,
    /// Mean residual, i.e. the systematic sensor offset.
    pub bias: DVector<f64>,
    pub used: usize,
    pub excluded: usize,
    pub trimmed: usize,
}

/// Sample covariance (mean removed, 1/(N-1)) of measurement residuals.
impl CalibrationResult {
    /// Replace the matching measurement covariance in `noise`.
    pub fn apply_to(&self, noise: &mut NoiseConfig) -> Result<()> {
        let mut updated = noise.clone();
        match self.modality {
            Modality::Radar => {
                updated.r_radar = Matrix3::from_iterator(self.covariance.iter().copied())
            }
            Modality::Rf => updated.r_rf = Matrix2::from_iterator(self.covariance.iter().copied()),
        }
        updated.validate()?;
        *noise = updated;
        Ok(())
    }
}

pub fn estimate_measurement_covariance(
    ms: &[Measurement],
    gt: &[GroundTruthSample],
) -> Result<CalibrationResult> {
    estimate_measurement_covariance_with(ms, gt, CovarianceMethod::Sample)
}

pub fn estimate_measurement_covariance_with(
    ms: &[Measurement],
    gt: &[GroundTruthSample],
    method: CovarianceMethod,
) -> Result<CalibrationResult> {
    let set = residuals(ms, gt)?;
    let dim = set.modality.dim();
    let (kept, trimmed) = match method {
        CovarianceMethod::Sample => (set.residuals, 0),
        CovarianceMethod::RobustMad { k } => {
            if !(k > 0.0) {
                return Err(Error::Config(format!(
                    "robust trimming factor must be positive, got {k}"
                )));
            }
            let total = set.residuals.len();
            let kept = trim_mad(set.residuals, dim, k);
            let trimmed = total - kept.len();
            (kept, trimmed)
        }
    };
    if kept.len() < dim + 1 {
        return Err(Error::InsufficientData(format!(
            "{} alignable {} measurements, need at least {}",
            kept.len(),
            set.modality,
            dim + 1
        )));
    }
    let (bias, covariance) = sample_covariance(&kept, dim);
    Ok(CalibrationResult {
        modality: set.modality,
        covariance,
        bias,
        used: kept.len(),
        excluded: set.excluded,
        trimmed,
    })
}

fn sample_covariance(xs: &[DVector<f64>], dim: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().fold(DVector::zeros(dim), |acc, x| acc + x) / n;
    let mut cov = DMatrix::zeros(dim, dim);
    for x in xs {
        let d = x - &mean;
        for i in 0..dim {
            for j in i..dim {
                cov[(i, j)] += d[i] * d[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

fn trim_mad(xs: Vec<DVector<f64>>, dim: usize, k: f64) -> Vec<DVector<f64>> {
    if xs.is_empty() {
        return xs;
    }
    let mut centers = Vec::with_capacity(dim);
    let mut scales = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut col: Vec<f64> = xs.iter().map(|x| x[axis]).collect();
        col.sort_by(f64::total_cmp);
        let med = median(&col);
        let mut dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
        dev.sort_by(f64::total_cmp);
        centers.push(med);
        scales.push(1.4826 * median(&dev));
    }
    xs.into_iter()
        .filter(|x| {
            (0..dim).all(|a| scales[a] == 0.0 || (x[a] - centers[a]).abs() <= k * scales[a])
        })
        .collect()
}

/// Convenience: interpolated truth as a vector.
pub(crate) fn truth_at(gt: &[GroundTruthSample], t: f64) -> Result<Vector3<f64>> {
    align_ground_truth(gt, t).map(EnuPosition::to_vector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gt2(a: (f64, [f64; 3]), b: (f64, [f64; 3])) -> Vec<GroundTruthSample> {
        vec![
            GroundTruthSample::new(a.0, EnuPosition::new(a.1[0], a.1[1], a.1[2])),
            GroundTruthSample::new(b.0, EnuPosition::new(b.1[0], b.1[1], b.1[2])),
        ]
    }

    #[test]
    fn interpolation_examples() {
        let gt = gt2((0.0, [0.0; 3]), (10.0, [10.0, 0.0, 0.0]));
        assert_eq!(align_ground_truth(&gt, 0.0).unwrap(), EnuPosition::ORIGIN);
        assert_eq!(
            align_ground_truth(&gt, 10.0).unwrap(),
            EnuPosition::new(10.0, 0.0, 0.0)
        );
        assert_eq!(
            align_ground_truth(&gt, 5.0).unwrap(),
            EnuPosition::new(5.0, 0.0, 0.0)
        );
        let gt = gt2((0.0, [0.0; 3]), (10.0, [10.0, 20.0, 40.0]));
        assert_eq!(
            align_ground_truth(&gt, 2.5).unwrap(),
            EnuPosition::new(2.5, 5.0, 10.0)
        );
    }

    #[test]
    fn interpolation_hits_interior_samples_exactly() {
        let gt: Vec<_> = (0..5)
            .map(|i| {
                GroundTruthSample::new(
                    i as f64 * 0.1,
                    EnuPosition::new(i as f64 * 3.7, -(i as f64), 1.0),
                )
            })
            .collect();
        for s in &gt {
            assert_eq!(align_ground_truth(&gt, s.timestamp).unwrap(), s.position);
        }
    }

    #[test]
    fn outside_span_is_an_error() {
        let gt = gt2((0.0, [0.0; 3]), (10.0, [10.0, 0.0, 0.0]));
        assert!(matches!(
            align_ground_truth(&gt, -0.1),
            Err(Error::OutOfSpan { .. })
        ));
        assert!(matches!(
            align_ground_truth(&gt, 10.1),
            Err(Error::OutOfSpan { .. })
        ));
        assert!(matches!(
            align_ground_truth(&gt[..1], 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn non_increasing_truth_rejected() {
        let mut gt = gt2((0.0, [0.0; 3]), (10.0, [10.0, 0.0, 0.0]));
        gt.push(GroundTruthSample::new(10.0, EnuPosition::ORIGIN));
        assert!(matches!(
            validate_ground_truth(&gt),
            Err(Error::Ordering(_))
        ));
    }

    fn static_truth() -> Vec<GroundTruthSample> {
        gt2((0.0, [0.0; 3]), (1000.0, [0.0; 3]))
    }

    #[test]
    fn identical_residuals_give_zero_covariance() {
        let ms: Vec<_> = (0..10)
            .map(|i| Measurement::rf(i as f64, 3.0, -1.0))
            .collect();
        let c = estimate_measurement_covariance(&ms, &static_truth()).unwrap();
        assert_eq!(c.covariance, DMatrix::zeros(2, 2));
        assert_eq!(c.bias.as_slice(), &[3.0, -1.0]);
    }

    #[test]
    fn alternating_residuals() {
        let n = 10;
        let ms: Vec<_> = (0..n)
            .map(|i| Measurement::rf(i as f64, if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let c = estimate_measurement_covariance(&ms, &static_truth()).unwrap();
        assert_relative_eq!(
            c.covariance[(0, 0)],
            n as f64 / (n as f64 - 1.0),
            epsilon = 1e-12
        );
        assert_eq!(c.covariance[(1, 1)], 0.0);
        assert_eq!(c.covariance[(0, 1)], 0.0);
    }

    #[test]
    fn applying_a_degenerate_estimate_keeps_the_old_noise() {
        let ms: Vec<_> = (0..10)
            .map(|i| Measurement::rf(i as f64, 3.0, -1.0))
            .collect();
        let c = estimate_measurement_covariance(&ms, &static_truth()).unwrap();
        let mut noise = NoiseConfig::default();
        assert!(c.apply_to(&mut noise).is_err());
        assert_eq!(noise, NoiseConfig::default());

        let ms: Vec<_> = (0..40)
            .map(|i| {
                Measurement::rf(
                    i as f64,
                    [1.0, -1.0, 2.0, 0.5][i % 4] * 5.0,
                    [2.0, 1.0, -1.0, -2.0][i % 4] * 3.0,
                )
            })
            .collect();
        let c = estimate_measurement_covariance(&ms, &static_truth()).unwrap();
        c.apply_to(&mut noise).unwrap();
        assert_eq!(noise.r_rf[(0, 1)], c.covariance[(0, 1)]);
        assert_eq!(noise.r_radar, NoiseConfig::default().r_radar);
    }

    #[test]
    fn too_few_samples() {
        let ms: Vec<_> = (0..3)
            .map(|i| Measurement::radar(i as f64, Vector3::new(1.0, 2.0, i as f64), None))
            .collect();
        assert!(matches!(
            estimate_measurement_covariance(&ms, &static_truth()),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            estimate_measurement_covariance(&[], &static_truth()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn out_of_span_measurements_are_excluded() {
        let mut ms: Vec<_> = (0..6)
            .map(|i| Measurement::rf(i as f64, i as f64, 0.0))
            .collect();
        ms.push(Measurement::rf(2000.0, 1e6, 1e6));
        let c = estimate_measurement_covariance(&ms, &static_truth()).unwrap();
        assert_eq!(c.excluded, 1);
        assert_eq!(c.used, 6);
    }

    #[test]
    fn mixed_modalities_rejected() {
        let ms = vec![
            Measurement::rf(0.0, 0.0, 0.0),
            Measurement::radar(1.0, Vector3::zeros(), None),
        ];
        assert!(residuals(&ms, &static_truth()).is_err());
    }

    #[test]
    fn robust_mode_trims_outliers() {
        let mut ms: Vec<_> = (0..200)
            .map(|i| {
                Measurement::rf(
                    i as f64,
                    ((i * 37) % 11) as f64 - 5.0,
                    ((i * 13) % 7) as f64 - 3.0,
                )
            })
            .collect();
        ms.push(Measurement::rf(500.0, 4000.0, -3000.0));
        let plain = estimate_measurement_covariance(&ms, &static_truth()).unwrap();
        let robust = estimate_measurement_covariance_with(
            &ms,
            &static_truth(),
            CovarianceMethod::RobustMad { k: 5.0 },
        )
        .unwrap();
        assert_eq!(robust.trimmed, 1);
        assert!(plain.covariance[(0, 0)] > 1000.0);
        assert!(robust.covariance[(0, 0)] < 20.0);
    }
}
