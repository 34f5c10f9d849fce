//! Near-field sensing-enabled predictive beamforming.
//!
//! A uniform linear array with a non-negligible aperture sees a nearby target
//! through spherical wavefronts, and a moving target produces Doppler shifts
//! that differ from element to element. Both effects make the full mobility
//! status (angle, distance, radial and transverse velocity) observable from a
//! single coherent processing interval (CPI). This crate provides the pieces of
//! a sense / predict / beamform loop built on that observation:
//!
//! - [`array`]: array geometry, near- and far-field steering vectors.
//! - [`kinematics`]: target states, the polar kinematic model and ground-truth
//!   trajectories.
//! - [`echo`]: monostatic echo synthesis with exact per-snapshot geometry.
//! - [`estimator`]: concentrated maximum-likelihood estimation of the mobility
//!   status from one CPI.
//! - [`crb`]: Fisher information and Cramér–Rao bounds.
//! - [`tracker`]: an extended Kalman filter over CPIs.
//! - [`beamformer`]: beam focusing with per-antenna Doppler compensation and
//!   communication metrics.

pub mod array;
pub mod beamformer;
pub mod crb;
pub mod echo;
pub mod error;
pub mod estimator;
pub mod kinematics;
mod phasor;
pub mod rng;
pub mod signature;
pub mod simplex;
pub mod tracker;

pub use array::{ArrayConfig, PolarLocation, SPEED_OF_LIGHT};
pub use beamformer::{BeamPlan, CommMetrics};
pub use crb::CrbReport;
pub use echo::{EchoFrame, LinkBudget, PathLossMode};
pub use error::{Error, Result};
pub use estimator::{AcquisitionGrid, EstimateReport, EstimatorOptions, SearchWindow, WindowPolicy};
pub use kinematics::{AngleUpdate, CpiClock, TargetState, Trajectory, TrajectoryKind};
pub use signature::{IntraCpiMotion, SignatureModel};
pub use tracker::{MeasurementNoise, NoiseModel, TrackState, Tracker, TrackerConfig};

/// Crate version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex baseband sample type used throughout the crate.
pub type Complex = num_complex::Complex64;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a linear power ratio to decibels.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}
