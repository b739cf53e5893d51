//! Constant-velocity motion model and position-only measurement models.
//!
//! State ordering is fixed to `x, y, z, vx, vy, vz` so that both measurement
//! matrices are leading-block selectors.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix6, SMatrix, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Covariance6 = Matrix6<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CvState(pub Vector6<f64>);

impl CvState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self(Vector6::new(
            position.x, position.y, position.z, velocity.x, velocity.y, velocity.z,
        ))
    }

    pub fn position(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    /// Radar: full 3D position.
    Radar,
    /// Passive RF (TDOA): horizontal position only.
    Rf,
}

impl Modality {
    pub const fn dim(self) -> usize {
        match self {
            Modality::Radar => 3,
            Modality::Rf => 2,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Modality::Radar => "radar",
            Modality::Rf => "rf",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radar" => Ok(Modality::Radar),
            "rf" => Ok(Modality::Rf),
            other => Err(Error::InputDomain(format!(
                "unknown modality '{other}' (expected radar or rf)"
            ))),
        }
    }
}

/// Process and measurement noise for the filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// White-acceleration standard deviation per axis, m/s^2.
    pub sigma_a: f64,
    /// Radar position covariance, m^2.
    #[serde(with = "row_major")]
    pub r_radar: Matrix3<f64>,
    /// RF horizontal position covariance, m^2.
    #[serde(with = "row_major")]
    pub r_rf: Matrix2<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_a: 1.0,
            r_radar: Matrix3::from_diagonal_element(1600.0),
            r_rf: Matrix2::from_diagonal_element(600.0),
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_a > 0.0 && self.sigma_a.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_a must be positive, got {}",
                self.sigma_a
            )));
        }
        check_spd("r_radar", &self.r_radar)?;
        check_spd("r_rf", &self.r_rf)?;
        Ok(())
    }

    /// Measurement covariance for `m` as a dynamically sized matrix.
    pub fn r(&self, m: Modality) -> DMatrix<f64> {
        match m {
            Modality::Radar => DMatrix::from_column_slice(3, 3, self.r_radar.as_slice()),
            Modality::Rf => DMatrix::from_column_slice(2, 2, self.r_rf.as_slice()),
        }
    }
}

fn check_spd<const D: usize>(name: &str, m: &SMatrix<f64, D, D>) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Config(format!("{name} has non-finite entries")));
    }
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).abs().max() > 1e-9 * scale {
        return Err(Error::Config(format!("{name} is not symmetric")));
    }
    if m.cholesky().is_none() {
        return Err(Error::Config(format!("{name} is not positive definite")));
    }
    Ok(())
}

/// Transition matrix `[[I, dt I], [0, I]]`.
pub fn cv_transition(dt: f64) -> Result<Matrix6<f64>> {
    check_dt(dt)?;
    let mut f = Matrix6::identity();
    for i in 0..3 {
        f[(i, i + 3)] = dt;
    }
    Ok(f)
}

/// Discrete white-acceleration process noise: per axis
/// `sigma_a^2 [[dt^4/4, dt^3/2], [dt^3/2, dt^2]]`, independent across axes.
pub fn process_noise(dt: f64, sigma_a: f64) -> Result<Matrix6<f64>> {
    check_dt(dt)?;
    if !(sigma_a > 0.0 && sigma_a.is_finite()) {
        return Err(Error::Config(format!(
            "sigma_a must be positive, got {sigma_a}"
        )));
    }
    let q = sigma_a * sigma_a;
    let dt2 = dt * dt;
    let pp = q * dt2 * dt2 / 4.0;
    let pv = q * dt2 * dt / 2.0;
    let vv = q * dt2;
    let mut m = Matrix6::zeros();
    for i in 0..3 {
        m[(i, i)] = pp;
        m[(i, i + 3)] = pv;
        m[(i + 3, i)] = pv;
        m[(i + 3, i + 3)] = vv;
    }
    Ok(m)
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InputDomain(format!(
            "time step must be non-negative, got {dt}"
        )));
    }
    Ok(())
}

/// Selector of the first `D` position components.
pub fn position_selector<const D: usize>() -> SMatrix<f64, D, 6> {
    SMatrix::<f64, D, 6>::identity()
}

/// `[I3 | 0]` for radar, `[I2 | 0]` for RF.
pub fn measurement_matrix(m: Modality) -> DMatrix<f64> {
    DMatrix::identity(m.dim(), 6)
}


mod row_major {
    use nalgebra::SMatrix;
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const R: usize, const C: usize>(
        m: &SMatrix<f64, R, C>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..R)
            .map(|i| (0..C).map(|j| m[(i, j)]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const R: usize, const C: usize>(
        d: D,
    ) -> Result<SMatrix<f64, R, C>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        if rows.len() != R || rows.iter().any(|r| r.len() != C) {
            return Err(de::Error::custom(format!(
                "expected a {R}x{C} matrix given as {R} rows"
            )));
        }
        Ok(SMatrix::from_fn(|i, j| rows[i][j]))
    }
}
