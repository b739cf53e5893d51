//! WGS-84 geodetic coordinates and local East-North-Up frames.
//!
//! Conversions go through Earth-centred Earth-fixed (ECEF) coordinates on the
//! full ellipsoid. Altitudes are ellipsoidal heights.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// WGS-84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// First eccentricity squared, `f (2 - f)`.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticCoord {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// Height above the WGS-84 ellipsoid.
    pub altitude_m: f64,
}

impl GeodeticCoord {
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Result<Self> {
        let c = Self {
            latitude_deg,
            longitude_deg,
            altitude_m,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(Error::InputDomain(format!(
                "latitude {} outside [-90, 90]",
                self.latitude_deg
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(Error::InputDomain(format!(
                "longitude {} outside [-180, 180]",
                self.longitude_deg
            )));
        }
        if !self.altitude_m.is_finite() {
            return Err(Error::InputDomain("altitude is not finite".into()));
        }
        Ok(())
    }

    /// Earth-centred Earth-fixed position in meters.
    pub fn to_ecef(&self) -> Vector3<f64> {
        let (sin_lat, cos_lat) = self.latitude_deg.to_radians().sin_cos();
        let (sin_lon, cos_lon) = self.longitude_deg.to_radians().sin_cos();
        let n = prime_vertical_radius(sin_lat);
        let h = self.altitude_m;
        Vector3::new(
            (n + h) * cos_lat * cos_lon,
            (n + h) * cos_lat * sin_lon,
            (n * (1.0 - WGS84_E2) + h) * sin_lat,
        )
    }

    /// Inverse of [`GeodeticCoord::to_ecef`], by fixed-point iteration on latitude.
    pub fn from_ecef(ecef: &Vector3<f64>) -> Self {
        let (x, y, z) = (ecef.x, ecef.y, ecef.z);
        let p = x.hypot(y);
        let lon = y.atan2(x);
        let mut lat = z.atan2(p * (1.0 - WGS84_E2));
        for _ in 0..10 {
            let sin_lat = lat.sin();
            let n = prime_vertical_radius(sin_lat);
            let next = (z + WGS84_E2 * n * sin_lat).atan2(p);
            let done = (next - lat).abs() < 1e-15;
            lat = next;
            if done {
                break;
            }
        }
        let (sin_lat, cos_lat) = lat.sin_cos();
        // Valid at all latitudes, including the poles.
        let h = p * cos_lat + z * sin_lat - WGS84_A * (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
        Self {
            latitude_deg: lat.to_degrees(),
            longitude_deg: lon.to_degrees(),
            altitude_m: h,
        }
    }
}

fn prime_vertical_radius(sin_lat: f64) -> f64 {
    WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt()
}

/// Position in a local East-North-Up frame, meters from the frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnuPosition {
    pub east_m: f64,
    pub north_m: f64,
    pub up_m: f64,
}

impl EnuPosition {
    pub const ORIGIN: EnuPosition = EnuPosition {
        east_m: 0.0,
        north_m: 0.0,
        up_m: 0.0,
    };

    pub const fn new(east_m: f64, north_m: f64, up_m: f64) -> Self {
        Self {
            east_m,
            north_m,
            up_m,
        }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.east_m, self.north_m, self.up_m)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &EnuPosition) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    pub fn horizontal_distance(&self, other: &EnuPosition) -> f64 {
        (self.east_m - other.east_m).hypot(self.north_m - other.north_m)
    }
}

/// Rotation taking ECEF offsets into the ENU frame at `origin` (rows are the
/// east, north and up unit vectors).
fn ecef_to_enu_rotation(origin: &GeodeticCoord) -> Matrix3<f64> {
    let (sin_lat, cos_lat) = origin.latitude_deg.to_radians().sin_cos();
    let (sin_lon, cos_lon) = origin.longitude_deg.to_radians().sin_cos();
    Matrix3::new(
        -sin_lon,
        cos_lon,
        0.0,
        -sin_lat * cos_lon,
        -sin_lat * sin_lon,
        cos_lat,
        cos_lat * cos_lon,
        cos_lat * sin_lon,
        sin_lat,
    )
}

pub fn geodetic_to_enu(p: &GeodeticCoord, origin: &GeodeticCoord) -> Result<EnuPosition> {
    p.validate()?;
    origin.validate()?;
    let delta = p.to_ecef() - origin.to_ecef();
    Ok(EnuPosition::from_vector(
        &(ecef_to_enu_rotation(origin) * delta),
    ))
}

pub fn enu_to_geodetic(p: &EnuPosition, origin: &GeodeticCoord) -> Result<GeodeticCoord> {
    origin.validate()?;
    let v = p.to_vector();
    if !v.iter().all(|c| c.is_finite()) {
        return Err(Error::InputDomain("ENU position is not finite".into()));
    }
    let ecef = origin.to_ecef() + ecef_to_enu_rotation(origin).transpose() * v;
    Ok(GeodeticCoord::from_ecef(&ecef))
}

/// Geometry of a local frame, for converting many points against one origin.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    origin: GeodeticCoord,
    origin_ecef: Vector3<f64>,
    rotation: Matrix3<f64>,
}

impl LocalFrame {
    pub fn new(origin: GeodeticCoord) -> Result<Self> {
        origin.validate()?;
        Ok(Self {
            origin,
            origin_ecef: origin.to_ecef(),
            rotation: ecef_to_enu_rotation(&origin),
        })
    }

    pub fn origin(&self) -> &GeodeticCoord {
        &self.origin
    }

    pub fn to_enu(&self, p: &GeodeticCoord) -> Result<EnuPosition> {
        p.validate()?;
        Ok(EnuPosition::from_vector(
            &(self.rotation * (p.to_ecef() - self.origin_ecef)),
        ))
    }

    pub fn to_geodetic(&self, p: &EnuPosition) -> GeodeticCoord {
        GeodeticCoord::from_ecef(&(self.origin_ecef + self.rotation.transpose() * p.to_vector()))
    }
}
