//! Tracking a moving RF emitter by fusing asynchronous 3D radar fixes and
//! 2D TDOA fixes through a constant-velocity Kalman filter.
//!
//! The crate is organized bottom-up:
//!
//! - [`geo`]: WGS-84 geodetic <-> local East-North-Up conversion.
//! - [`model`]: constant-velocity transition, process noise, measurement selectors.
//! - [`filter`]: predict/update with NIS validation gating.
//! - [`calib`]: ground-truth alignment and empirical measurement covariances.
//! - [`pipeline`]: timestamp-ordered fusion of both streams into a [`pipeline::FusedTrack`].
//! - [`sim`]: waypoint trajectories, polar radar noise and TDOA multilateration.
//! - [`metrics`]: error statistics, temporal coverage, CDFs and NEES.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calib;
mod error;
pub mod filter;
pub mod geo;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
