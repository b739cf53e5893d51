//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};

// ---------------------------------------------------------------- geodesy

const A: f64 = 6_378_137.0;
const INV_F: f64 = 298.257_223_563;

fn b() -> f64 {
    A * (1.0 - 1.0 / INV_F)
}

/// Geodetic to ECEF by intersecting the ellipsoid normal: the point on the
/// ellipsoid whose normal has the given latitude, pushed out along it.
pub fn oracle_ecef(lat_deg: f64, lon_deg: f64, h: f64) -> Vector3<f64> {
    let (lat, lon) = (lat_deg.to_radians(), lon_deg.to_radians());
    let b = b();
    // parametric (reduced) latitude: tan(beta) = (b / a) tan(lat)
    let beta = ((b / A) * lat.tan()).atan();
    let beta = if lat.abs() > std::f64::consts::FRAC_PI_2 - 1e-12 {
        lat
    } else {
        beta
    };
    let p_surface = A * beta.cos();
    let z_surface = b * beta.sin();
    let normal = Vector3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin());
    Vector3::new(p_surface * lon.cos(), p_surface * lon.sin(), z_surface) + normal * h
}

/// Rows are the east, north and up unit vectors at the origin; up is the
/// normalized gradient of the ellipsoid equation.
pub fn oracle_enu_basis(lat_deg: f64, lon_deg: f64) -> Matrix3<f64> {
    let s = oracle_ecef(lat_deg, lon_deg, 0.0);
    let b = b();
    let up = Vector3::new(s.x / (A * A), s.y / (A * A), s.z / (b * b)).normalize();
    let east = Vector3::z().cross(&up);
    let east = if east.norm() < 1e-12 {
        Vector3::y()
    } else {
        east.normalize()
    };
    let north = up.cross(&east);
    Matrix3::from_rows(&[east.transpose(), north.transpose(), up.transpose()])
}

pub fn oracle_geodetic_to_enu(p: (f64, f64, f64), origin: (f64, f64, f64)) -> Vector3<f64> {
    let d = oracle_ecef(p.0, p.1, p.2) - oracle_ecef(origin.0, origin.1, origin.2);
    oracle_enu_basis(origin.0, origin.1) * d
}

// ------------------------------------------------------------ chi-squared

fn erf(x: f64) -> f64 {
    // Maclaurin series; accurate to f64 precision for |x| < 4.
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

pub fn chi2_cdf(x: f64, dof: u32) -> f64 {
    match dof {
        2 => 1.0 - (-x / 2.0).exp(),
        3 => erf((x / 2.0).sqrt()) - (2.0 * x / std::f64::consts::PI).sqrt() * (-x / 2.0).exp(),
        _ => unimplemented!("closed forms only for 2 and 3 dof"),
    }
}

pub fn chi2_quantile_bisect(dof: u32, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, dof) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ------------------------------------------------------ batch least squares

pub struct BatchStep {
    pub dt: f64,
    /// Observed components of the position (0 = east, 1 = north, 2 = up)
    /// with their measurement covariance.
    pub z: DVector<f64>,
    pub r: DMatrix<f64>,
}

/// Posterior mean of the final state given every measurement, solved as one
/// whitened linear least-squares problem over the initial state and the
/// per-interval accelerations. Avoids the singular process-noise matrix.
pub fn batch_final_state(
    m0: &Vector6<f64>,
    p0: &DMatrix<f64>,
    sigma_a: f64,
    steps: &[BatchStep],
) -> Vector6<f64> {
    let n_unknown = 6 + 3 * steps.len();
    let n_rows = 6 + 3 * steps.len() + steps.iter().map(|s| s.z.len()).sum::<usize>();
    let mut a = DMatrix::<f64>::zeros(n_rows, n_unknown);
    let mut y = DVector::<f64>::zeros(n_rows);

    // prior on x0
    let l0 = p0.clone().cholesky().expect("P0 must be SPD").l();
    let l0_inv = l0.try_inverse().unwrap();
    a.view_mut((0, 0), (6, 6)).copy_from(&l0_inv);
    y.rows_mut(0, 6)
        .copy_from(&(&l0_inv * DVector::from_column_slice(m0.as_slice())));
    // priors on accelerations
    for k in 0..steps.len() {
        for i in 0..3 {
            a[(6 + 3 * k + i, 6 + 3 * k + i)] = 1.0 / sigma_a;
        }
    }

    // x_k as an affine map of the unknowns: x_k = T_k theta
    let mut t = DMatrix::<f64>::zeros(6, n_unknown);
    for i in 0..6 {
        t[(i, i)] = 1.0;
    }
    let mut row = 6 + 3 * steps.len();
    for (k, s) in steps.iter().enumerate() {
        let dt = s.dt;
        let mut f = DMatrix::<f64>::identity(6, 6);
        for i in 0..3 {
            f[(i, i + 3)] = dt;
        }
        t = &f * &t;
        for i in 0..3 {
            t[(i, 6 + 3 * k + i)] += 0.5 * dt * dt;
            t[(i + 3, 6 + 3 * k + i)] += dt;
        }
        let d = s.z.len();
        let lr_inv =
            s.r.clone()
                .cholesky()
                .expect("R must be SPD")
                .l()
                .try_inverse()
                .unwrap();
        let h_t = t.rows(0, d).into_owned();
        a.view_mut((row, 0), (d, n_unknown))
            .copy_from(&(&lr_inv * h_t));
        y.rows_mut(row, d).copy_from(&(&lr_inv * &s.z));
        row += d;
    }

    let theta = a.svd(true, true).solve(&y, 1e-14).expect("least squares");
    let x = &t * theta;
    Vector6::from_column_slice(x.as_slice())
}
