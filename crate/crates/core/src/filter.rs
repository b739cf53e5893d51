//! Kalman predict/update with normalized-innovation-squared (NIS) gating.

use nalgebra::{DMatrix, DVector, Matrix6, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::model::{cv_transition, process_noise, Covariance6, CvState, Modality, NoiseConfig};
use crate::stats::chi2_quantile;
use crate::{Error, Result};

/// Innovation covariances with a reciprocal condition number below this are
/// treated as singular.
pub const MIN_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub estimate: CvState,
    pub covariance: Covariance6,
    /// Seconds, on the same clock as the measurements.
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeKind {
    Updated,
    RejectedByGate,
    Coasted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub kind: OutcomeKind,
    /// Absent for pure coasting.
    pub nis: Option<f64>,
    pub innovation: Option<DVector<f64>>,
}

/// Innovation `z - H s` and its covariance `H P H^T + R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovation {
    pub residual: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// How the first accepted measurement seeds the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Altitude assigned when the first fix is 2D.
    pub default_altitude_m: f64,
    /// Factor applied to R for the initial position covariance.
    pub position_inflation: f64,
    /// Initial variance of each velocity component, m^2/s^2.
    pub velocity_variance: f64,
    /// Initial altitude variance when seeding from a 2D fix, m^2.
    pub altitude_variance: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            default_altitude_m: 0.0,
            position_inflation: 10.0,
            velocity_variance: 100.0,
            altitude_variance: 1e4,
        }
    }
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("position_inflation", self.position_inflation),
            ("velocity_variance", self.velocity_variance),
            ("altitude_variance", self.altitude_variance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "init.{name} must be positive, got {v}"
                )));
            }
        }
        if !self.default_altitude_m.is_finite() {
            return Err(Error::Config(
                "init.default_altitude_m must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Seed a filter from its first measurement: position from the fix, zero
/// velocity with a wide prior.
pub fn initialize(
    z: &[f64],
    m: Modality,
    noise: &NoiseConfig,
    t: f64,
    init: &InitConfig,
) -> Result<FilterState> {
    check_dim(z, m)?;
    check_finite(z)?;
    let mut p = Matrix6::zeros();
    let position = match m {
        Modality::Radar => {
            p.fixed_view_mut::<3, 3>(0, 0)
                .copy_from(&(noise.r_radar * init.position_inflation));
            Vector3::new(z[0], z[1], z[2])
        }
        Modality::Rf => {
            p.fixed_view_mut::<2, 2>(0, 0)
                .copy_from(&(noise.r_rf * init.position_inflation));
            p[(2, 2)] = init.altitude_variance;
            Vector3::new(z[0], z[1], init.default_altitude_m)
        }
    };
    for i in 3..6 {
        p[(i, i)] = init.velocity_variance;
    }
    Ok(FilterState {
        estimate: CvState::new(position, Vector3::zeros()),
        covariance: p,
        timestamp: t,
    })
}

/// Propagate the state `dt` seconds forward.
pub fn predict(fs: &FilterState, dt: f64, noise: &NoiseConfig) -> Result<FilterState> {
    if dt < 0.0 {
        return Err(Error::Ordering(format!(
            "cannot predict backwards by {dt} s from t = {}; sort measurements first",
            fs.timestamp
        )));
    }
    let f = cv_transition(dt)?;
    let q = process_noise(dt, noise.sigma_a)?;
    let covariance = symmetrize(&(f * fs.covariance * f.transpose() + q));
    Ok(FilterState {
        estimate: CvState(f * fs.estimate.0),
        covariance,
        timestamp: fs.timestamp + dt,
    })
}

/// Innovation of `z` against the (already predicted) state.
pub fn innovation(
    fs: &FilterState,
    z: &[f64],
    m: Modality,
    noise: &NoiseConfig,
) -> Result<Innovation> {
    check_dim(z, m)?;
    let d = m.dim();
    let predicted = fs.estimate.0.rows(0, d);
    let residual = DVector::from_iterator(d, z.iter().zip(predicted.iter()).map(|(a, b)| a - b));
    let covariance = fs.covariance.view((0, 0), (d, d)) + noise.r(m);
    Ok(Innovation {
        residual,
        covariance,
    })
}

/// `y^T S^-1 y`.
pub fn nis(innovation: &DVector<f64>, s: &DMatrix<f64>) -> Result<f64> {
    if s.nrows() != innovation.len() || s.ncols() != innovation.len() {
        return Err(Error::DimensionMismatch {
            expected: innovation.len(),
            actual: s.nrows(),
        });
    }
    check_conditioning(s)?;
    let chol = s
        .clone()
        .cholesky()
        .ok_or(Error::Degenerate { rcond: 0.0 })?;
    let w = chol
        .l()
        .solve_lower_triangular(innovation)
        .ok_or(Error::Degenerate { rcond: 0.0 })?;
    Ok(w.norm_squared())
}

/// Chi-squared acceptance threshold for a `dim`-dimensional innovation.
pub fn chi2_threshold(dim: usize, confidence: f64) -> Result<f64> {
    if !(dim == 2 || dim == 3) {
        return Err(Error::InputDomain(format!(
            "gating dimension must be 2 or 3, got {dim}"
        )));
    }
    chi2_quantile(dim as f64, confidence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateDecision {
    Accept,
    Reject,
}

pub fn gate(nis_value: f64, dim: usize, confidence: f64) -> Result<GateDecision> {
    Ok(NisGate::new(confidence)?.check(nis_value, dim))
}

/// NIS gate with thresholds precomputed for both measurement dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NisGate {
    confidence: f64,
    threshold_2d: f64,
    threshold_3d: f64,
}

impl NisGate {
    pub fn new(confidence: f64) -> Result<Self> {
        Ok(Self {
            confidence,
            threshold_2d: chi2_threshold(2, confidence)?,
            threshold_3d: chi2_threshold(3, confidence)?,
        })
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn threshold(&self, dim: usize) -> f64 {
        if dim == 2 {
            self.threshold_2d
        } else {
            self.threshold_3d
        }
    }

    pub fn check(&self, nis_value: f64, dim: usize) -> GateDecision {
        if nis_value <= self.threshold(dim) {
            GateDecision::Accept
        } else {
            GateDecision::Reject
        }
    }
}

/// Ungated Kalman update.
pub fn update(
    fs: &FilterState,
    z: &[f64],
    m: Modality,
    noise: &NoiseConfig,
) -> Result<(FilterState, UpdateOutcome)> {
    gated_update(fs, z, m, noise, None)
}

/// Kalman update that first checks the NIS against `gate`. On rejection the
/// returned state is an unmodified copy of `fs`.
pub fn gated_update(
    fs: &FilterState,
    z: &[f64],
    m: Modality,
    noise: &NoiseConfig,
    gate: Option<&NisGate>,
) -> Result<(FilterState, UpdateOutcome)> {
    check_dim(z, m)?;
    check_finite(z)?;
    match m {
        Modality::Radar => correct::<3>(fs, z, &noise.r_radar, gate),
        Modality::Rf => correct::<2>(fs, z, &noise.r_rf, gate),
    }
}

fn correct<const D: usize>(
    fs: &FilterState,
    z: &[f64],
    r: &SMatrix<f64, D, D>,
    gate: Option<&NisGate>,
) -> Result<(FilterState, UpdateOutcome)> {
    let p = &fs.covariance;
    let z = SVector::<f64, D>::from_column_slice(z);
    let y = z - fs.estimate.0.fixed_rows::<D>(0);
    let s: SMatrix<f64, D, D> = p.fixed_view::<D, D>(0, 0) + r;
    check_conditioning(&s)?;
    let chol = s.cholesky().ok_or(Error::Degenerate { rcond: 0.0 })?;
    let nis_value = {
        let w = chol
            .l()
            .solve_lower_triangular(&y)
            .ok_or(Error::Degenerate { rcond: 0.0 })?;
        w.norm_squared()
    };
    let innovation = Some(DVector::from_column_slice(y.as_slice()));

    if let Some(g) = gate {
        if g.check(nis_value, D) == GateDecision::Reject {
            let outcome = UpdateOutcome {
                kind: OutcomeKind::RejectedByGate,
                nis: Some(nis_value),
                innovation,
            };
            return Ok((fs.clone(), outcome));
        }
    }

    // K = P H^T S^-1, and P H^T is the first D columns of P.
    let pht: SMatrix<f64, 6, D> = p.fixed_view::<6, D>(0, 0).into_owned();
    let gain: SMatrix<f64, 6, D> = chol.solve(&pht.transpose()).transpose();
    let estimate = CvState(fs.estimate.0 + gain * y);

    let mut i_kh = Matrix6::<f64>::identity();
    let mut block = i_kh.fixed_view_mut::<6, D>(0, 0);
    block -= gain;
    let covariance = symmetrize(&(i_kh * p * i_kh.transpose() + gain * r * gain.transpose()));

    let outcome = UpdateOutcome {
        kind: OutcomeKind::Updated,
        nis: Some(nis_value),
        innovation,
    };
    Ok((
        FilterState {
            estimate,
            covariance,
            timestamp: fs.timestamp,
        },
        outcome,
    ))
}

/// Prediction-only step, reported as a coast.
pub fn coast(
    fs: &FilterState,
    dt: f64,
    noise: &NoiseConfig,
) -> Result<(FilterState, UpdateOutcome)> {
    let predicted = predict(fs, dt, noise)?;
    Ok((
        predicted,
        UpdateOutcome {
            kind: OutcomeKind::Coasted,
            nis: None,
            innovation: None,
        },
    ))
}

fn symmetrize(p: &Matrix6<f64>) -> Matrix6<f64> {
    (p + p.transpose()) * 0.5
}

fn check_conditioning<R, C, S>(s: &nalgebra::Matrix<f64, R, C, S>) -> Result<()>
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<f64, R, C>,
{
    if !s.iter().all(|v| v.is_finite()) {
        return Err(Error::Degenerate { rcond: f64::NAN });
    }
    let dense = DMatrix::from_iterator(s.nrows(), s.ncols(), s.iter().copied());
    let eig = dense.symmetric_eigen().eigenvalues;
    let max = eig.max();
    let min = eig.min();
    let rcond = if max > 0.0 { min / max } else { 0.0 };
    if !(rcond >= MIN_RCOND) {
        return Err(Error::Degenerate { rcond });
    }
    Ok(())
}

fn check_dim(z: &[f64], m: Modality) -> Result<()> {
    if z.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            actual: z.len(),
        });
    }
    Ok(())
}

fn check_finite(z: &[f64]) -> Result<()> {
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::InputDomain(
            "measurement has non-finite components".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, Matrix3, Vector6};

    fn state(v: [f64; 6], p: Matrix6<f64>) -> FilterState {
        FilterState {
            estimate: CvState(Vector6::from_column_slice(&v)),
            covariance: p,
            timestamp: 0.0,
        }
    }

    fn unit_noise() -> NoiseConfig {
        NoiseConfig {
            sigma_a: 1.0,
            r_radar: Matrix3::identity(),
            r_rf: Matrix2::identity(),
        }
    }

    #[test]
    fn predict_zero_dt_is_identity() {
        let fs = state([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], Matrix6::identity() * 3.0);
        let out = predict(&fs, 0.0, &unit_noise()).unwrap();
        assert_eq!(out, fs);
    }

    #[test]
    fn predict_moves_position_by_velocity() {
        let fs = state([0.0, 0.0, 0.0, 10.0, 0.0, 0.0], Matrix6::identity());
        let out = predict(&fs, 2.0, &unit_noise()).unwrap();
        assert_eq!(out.estimate.position(), Vector3::new(20.0, 0.0, 0.0));
        assert_eq!(out.estimate.velocity(), Vector3::new(10.0, 0.0, 0.0));
        assert_eq!(out.timestamp, 2.0);
    }

    #[test]
    fn predict_identity_covariance() {
        let fs = state([0.0; 6], Matrix6::identity());
        let out = predict(&fs, 1.0, &unit_noise()).unwrap();
        for i in 0..3 {
            assert_relative_eq!(out.covariance[(i, i)], 2.25, epsilon = 1e-15);
            assert_relative_eq!(out.covariance[(i + 3, i + 3)], 2.0, epsilon = 1e-15);
            assert_relative_eq!(out.covariance[(i, i + 3)], 1.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn predict_rejects_negative_dt() {
        let fs = state([0.0; 6], Matrix6::identity());
        assert!(matches!(
            predict(&fs, -1.0, &unit_noise()),
            Err(Error::Ordering(_))
        ));
    }

    #[test]
    fn scalar_kalman_update() {
        let fs = state([5.0, 0.0, 0.0, 0.0, 0.0, 0.0], Matrix6::identity());
        let (post, outcome) =
            update(&fs, &[7.0, 0.0, 0.0], Modality::Radar, &unit_noise()).unwrap();
        assert_relative_eq!(post.estimate.0[0], 6.0, epsilon = 1e-15);
        assert_relative_eq!(post.covariance[(0, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(outcome.kind, OutcomeKind::Updated);
        assert_relative_eq!(outcome.nis.unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn huge_measurement_noise_leaves_prior() {
        let mut noise = unit_noise();
        noise.r_radar = Matrix3::identity() * 1e12;
        let mut p = Matrix6::identity();
        p[(0, 3)] = 0.3;
        p[(3, 0)] = 0.3;
        let fs = state([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], p);
        let (post, _) = update(&fs, &[11.0, -8.0, 13.0], Modality::Radar, &noise).unwrap();
        for i in 0..6 {
            assert_relative_eq!(post.estimate.0[i], fs.estimate.0[i], max_relative = 1e-6);
            for j in 0..6 {
                assert!((post.covariance[(i, j)] - p[(i, j)]).abs() <= 1e-6 * p[(i, i)].max(1.0));
            }
        }
    }

    #[test]
    fn rf_update_leaves_uncorrelated_altitude() {
        let mut p = Matrix6::identity() * 4.0;
        p[(0, 3)] = 1.0;
        p[(3, 0)] = 1.0;
        let fs = state([0.0, 0.0, 50.0, 1.0, 1.0, 0.0], p);
        let (post, _) = update(&fs, &[3.0, -2.0], Modality::Rf, &unit_noise()).unwrap();
        assert_eq!(post.estimate.0[2], 50.0);
        assert_eq!(post.covariance[(2, 2)], 4.0);
        assert_eq!(post.estimate.0[5], 0.0);
    }

    #[test]
    fn nis_examples() {
        let s = DMatrix::identity(2, 2);
        assert_eq!(nis(&DVector::zeros(2), &s).unwrap(), 0.0);
        assert_relative_eq!(
            nis(&DVector::from_vec(vec![3.0, 0.0]), &s).unwrap(),
            9.0,
            epsilon = 1e-14
        );
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        assert_relative_eq!(
            nis(&DVector::from_vec(vec![1.0, 1.0]), &s).unwrap(),
            1.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn singular_innovation_covariance_is_an_error() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-14]));
        assert!(matches!(
            nis(&DVector::zeros(2), &s),
            Err(Error::Degenerate { .. })
        ));

        let noise = NoiseConfig {
            r_rf: Matrix2::zeros(),
            ..unit_noise()
        };
        let fs = state([0.0; 6], Matrix6::zeros());
        assert!(matches!(
            update(&fs, &[1.0, 1.0], Modality::Rf, &noise),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let fs = state([0.0; 6], Matrix6::identity());
        let err = update(&fs, &[1.0, 2.0], Modality::Radar, &unit_noise()).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                actual: 2
            }
        );
        assert!(nis(&DVector::zeros(3), &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn gate_examples() {
        assert_eq!(gate(0.0, 2, 0.95).unwrap(), GateDecision::Accept);
        assert_eq!(gate(0.0, 3, 0.95).unwrap(), GateDecision::Accept);
        assert_eq!(gate(9.0, 2, 0.95).unwrap(), GateDecision::Reject);
        assert_eq!(gate(7.0, 3, 0.95).unwrap(), GateDecision::Accept);
        assert!(gate(1.0, 2, 1.5).is_err());
        assert!(chi2_threshold(4, 0.95).is_err());
    }

    #[test]
    fn threshold_vanishes_at_low_confidence() {
        let t = chi2_threshold(2, 1e-9).unwrap();
        assert!(t > 0.0 && t < 1e-8);
    }

    #[test]
    fn rejection_has_no_side_effects() {
        let fs = state([0.0, 0.0, 0.0, 1.0, 0.0, 0.0], Matrix6::identity());
        let g = NisGate::new(0.95).unwrap();
        let (out, outcome) =
            gated_update(&fs, &[100.0, 0.0], Modality::Rf, &unit_noise(), Some(&g)).unwrap();
        assert_eq!(outcome.kind, OutcomeKind::RejectedByGate);
        assert_relative_eq!(outcome.nis.unwrap(), 5000.0, epsilon = 1e-9);
        assert_eq!(out, fs);
    }

    #[test]
    fn initialize_from_radar_and_rf() {
        let noise = NoiseConfig::default();
        let init = InitConfig::default();
        let fs = initialize(&[10.0, 20.0, 30.0], Modality::Radar, &noise, 4.0, &init).unwrap();
        assert_eq!(fs.estimate.0, Vector6::new(10.0, 20.0, 30.0, 0.0, 0.0, 0.0));
        assert_eq!(
            fs.covariance.fixed_view::<3, 3>(0, 0).into_owned(),
            noise.r_radar * 10.0
        );
        assert_eq!(fs.covariance[(4, 4)], 100.0);
        assert_eq!(fs.timestamp, 4.0);

        let fs = initialize(&[10.0, 20.0], Modality::Rf, &noise, 0.0, &init).unwrap();
        assert_eq!(fs.estimate.0, Vector6::new(10.0, 20.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(fs.covariance[(2, 2)], 1e4);
        assert_eq!(fs.covariance[(0, 0)], noise.r_rf[(0, 0)] * 10.0);
    }

    #[test]
    fn coast_reports_no_nis() {
        let fs = state([0.0; 6], Matrix6::identity());
        let (_, outcome) = coast(&fs, 1.0, &unit_noise()).unwrap();
        assert_eq!(outcome.kind, OutcomeKind::Coasted);
        assert!(outcome.nis.is_none());
    }
}
