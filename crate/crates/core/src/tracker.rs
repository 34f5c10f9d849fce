//! Extended Kalman filter over the mobility status.
//!
//! The per-CPI maximum-likelihood estimate is the measurement, with identity
//! observation map. The prediction uses the polar kinematic model and its
//! Jacobian.

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::array::ArrayConfig;
use crate::crb::crb_report;
use crate::echo::EchoFrame;
use crate::error::{Error, Result};
use crate::estimator::{frame_model, grid_then_refine, EstimateReport, EstimatorOptions, WindowPolicy};
use crate::kinematics::{AngleUpdate, CpiClock, TargetState};

/// χ²₄ quantile at 0.999.
pub const GATE_CHI2_4_999: f64 = 18.466826952903151;

const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    /// Posterior (θ, r, v_r, v_θ) for the current CPI.
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub cpi_index: usize,
    /// One CPI ahead.
    pub predicted_mean: Vector4<f64>,
    pub predicted_covariance: Matrix4<f64>,
}

impl TrackState {
    /// A track whose prediction equals its current belief.
    pub fn new(mean: Vector4<f64>, covariance: Matrix4<f64>) -> Result<Self> {
        TargetState::from_vector(&mean)?;
        let covariance = condition(&covariance, "covariance")?;
        Ok(Self { mean, covariance, cpi_index: 0, predicted_mean: mean, predicted_covariance: covariance })
    }

    pub fn state(&self) -> Result<TargetState> {
        TargetState::from_vector(&self.mean)
    }

    pub fn predicted_state(&self) -> Result<TargetState> {
        TargetState::from_vector(&self.predicted_mean)
    }
}

/// Symmetrizes and floors the spectrum at 1e-12.
fn condition(m: &Matrix4<f64>, what: &'static str) -> Result<Matrix4<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPsd(what));
    }
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().all(|&l| l >= EIGEN_FLOOR) {
        return Ok(sym);
    }
    let floored = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
    let out = eig.eigenvectors * Matrix4::from_diagonal(&floored) * eig.eigenvectors.transpose();
    Ok((out + out.transpose()) * 0.5)
}

fn is_psd(m: &Matrix4<f64>) -> bool {
    if m.iter().any(|v| !v.is_finite()) || (m - m.transpose()).abs().max() > 1e-9 * m.abs().max() {
        return false;
    }
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let scale = eig.eigenvalues.abs().max();
    eig.eigenvalues.iter().all(|&l| l >= -1e-12 * scale)
}

/// Maps an angle difference into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementNoise {
    /// CRB evaluated at the predicted state with the estimated reflection.
    CrbPlugIn,
    Fixed(Matrix4<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Unmodeled acceleration intensity, m/s².
    pub acceleration: f64,
    pub measurement: MeasurementNoise,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { acceleration: 5.0, measurement: MeasurementNoise::CrbPlugIn }
    }
}

impl NoiseModel {
    /// Piecewise-constant white acceleration along the radial and transverse
    /// directions, with the transverse position expressed as an angle at `r`.
    pub fn process_noise(&self, r: f64, dt: f64) -> Matrix4<f64> {
        let q = self.acceleration * self.acceleration;
        let (p, c, v) = (q * dt.powi(4) / 4.0, q * dt.powi(3) / 2.0, q * dt * dt);
        let mut m = Matrix4::zeros();
        m[(0, 0)] = p / (r * r);
        m[(0, 3)] = c / r;
        m[(3, 0)] = c / r;
        m[(3, 3)] = v;
        m[(1, 1)] = p;
        m[(1, 2)] = c;
        m[(2, 1)] = c;
        m[(2, 2)] = v;
        m
    }
}

/// Jacobian of the kinematic map at `mean`.
pub fn transition_jacobian(mean: &Vector4<f64>, dt: f64, mode: AngleUpdate) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    let (r, vt) = (mean[1], mean[3]);
    match mode {
        AngleUpdate::Dimensional => {
            f[(0, 1)] = -vt * dt / (r * r);
            f[(0, 3)] = dt / r;
        }
        AngleUpdate::Unscaled => {
            f[(0, 3)] = dt;
        }
    }
    f[(1, 2)] = dt;
    f
}

/// Propagates the posterior one step. On success the mean and the predicted
/// fields both hold the propagated belief; if the propagated mean leaves the
/// valid region the track coasts with `None` returned alongside.
pub fn predict(
    track: &TrackState,
    dt: f64,
    q: &Matrix4<f64>,
    mode: AngleUpdate,
) -> Result<(TrackState, bool)> {
    if !is_psd(q) {
        return Err(Error::NotPsd("process noise"));
    }
    let f = transition_jacobian(&track.mean, dt, mode);
    let p = condition(&(f * track.covariance * f.transpose() + q), "predicted covariance")?;
    let (mean, valid) = match track.state()?.kinematic_step(dt, mode) {
        Ok(s) => (s.to_vector(), true),
        Err(_) => (track.mean, false),
    };
    Ok((
        TrackState {
            mean,
            covariance: p,
            cpi_index: track.cpi_index + 1,
            predicted_mean: mean,
            predicted_covariance: p,
        },
        valid,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub track: TrackState,
    /// Squared Mahalanobis distance of the innovation.
    pub distance: f64,
    pub gated_out: bool,
}

/// Linear update with identity observation map. A measurement outside the
/// gate leaves the prior untouched.
pub fn update(prior: &TrackState, z: &Vector4<f64>, r: &Matrix4<f64>, gate: f64) -> Result<UpdateOutcome> {
    if !is_psd(r) {
        return Err(Error::NotPsd("measurement noise"));
    }
    let p = prior.covariance;
    let mut innov = z - prior.mean;
    innov[0] = wrap_angle(innov[0]);
    let s = condition(&(p + r), "innovation covariance")?;
    let s_inv = s.try_inverse().ok_or(Error::NotPsd("innovation covariance"))?;
    let distance = (innov.transpose() * s_inv * innov)[(0, 0)];
    if !(distance <= gate) {
        return Ok(UpdateOutcome { track: prior.clone(), distance, gated_out: true });
    }
    let k = p * s_inv;
    let mut mean = prior.mean + k * innov;
    mean[0] = wrap_angle(mean[0]);
    if TargetState::from_vector(&mean).is_err() {
        return Ok(UpdateOutcome { track: prior.clone(), distance, gated_out: true });
    }
    let covariance = condition(&((Matrix4::identity() - k) * p), "posterior covariance")?;
    Ok(UpdateOutcome {
        track: TrackState {
            mean,
            covariance,
            cpi_index: prior.cpi_index,
            predicted_mean: prior.predicted_mean,
            predicted_covariance: prior.predicted_covariance,
        },
        distance,
        gated_out: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub noise: NoiseModel,
    pub gate: f64,
    /// Consecutive gated-out CPIs tolerated before the track is lost.
    pub max_coasts: usize,
    pub angle_update: AngleUpdate,
    pub window: WindowPolicy,
    pub estimator: EstimatorOptions,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            noise: NoiseModel::default(),
            gate: GATE_CHI2_4_999,
            max_coasts: 5,
            angle_update: AngleUpdate::Dimensional,
            window: WindowPolicy::default(),
            estimator: EstimatorOptions::default(),
        }
    }
}

/// What one CPI of tracking produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CpiOutcome {
    pub report: EstimateReport,
    /// Belief before this CPI's measurement.
    pub prior_mean: Vector4<f64>,
    pub prior_covariance: Matrix4<f64>,
    /// Belief after this CPI's measurement.
    pub posterior_mean: Vector4<f64>,
    pub posterior_covariance: Matrix4<f64>,
    pub measurement_noise: Matrix4<f64>,
    pub gated_out: bool,
}

/// Sequential sense / update / predict loop for one target.
#[derive(Debug, Clone)]
pub struct Tracker {
    array: ArrayConfig,
    clock: CpiClock,
    config: TrackerConfig,
    track: TrackState,
    coasts: usize,
    lost: bool,
}

impl Tracker {
    /// `mean` and `covariance` describe the target at the start of the first
    /// CPI.
    pub fn new(
        array: ArrayConfig,
        clock: CpiClock,
        config: TrackerConfig,
        mean: Vector4<f64>,
        covariance: Matrix4<f64>,
    ) -> Result<Self> {
        if !(config.noise.acceleration >= 0.0) {
            return Err(Error::invalid("acceleration", "must be non-negative"));
        }
        if let MeasurementNoise::Fixed(r) = config.noise.measurement {
            if !is_psd(&r) {
                return Err(Error::NotPsd("measurement noise"));
            }
        }
        Ok(Self { array, clock, config, track: TrackState::new(mean, covariance)?, coasts: 0, lost: false })
    }

    pub fn track(&self) -> &TrackState {
        &self.track
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Prior for the upcoming CPI, which the transmitter focuses on.
    pub fn prior(&self) -> Result<TargetState> {
        self.track.predicted_state()
    }

    pub fn consecutive_coasts(&self) -> usize {
        self.coasts
    }

    pub fn is_lost(&self) -> bool {
        self.lost
    }

    /// Processes the echo of the current CPI and advances to the next one.
    pub fn step(&mut self, frame: &EchoFrame) -> Result<CpiOutcome> {
        if self.lost {
            return Err(Error::TrackLost(self.track.cpi_index));
        }
        let prior_state = self.prior()?;
        let prior = TrackState {
            mean: self.track.predicted_mean,
            covariance: self.track.predicted_covariance,
            ..self.track.clone()
        };
        let window =
            self.config.window.window(&self.array, &self.clock, prior_state, Some(&prior.covariance))?;
        let report = grid_then_refine(&self.array, &self.clock, frame, &window, &self.config.estimator)?;
        let r = match self.config.noise.measurement {
            MeasurementNoise::Fixed(r) => r,
            MeasurementNoise::CrbPlugIn => {
                let model = frame_model(&self.array, &self.clock, frame, self.config.estimator.motion)?;
                let rep = crb_report(
                    &model,
                    &prior_state,
                    report.reflection,
                    self.config.estimator.transmit_power,
                    frame.noise_power,
                    self.config.estimator.fd_steps,
                );
                condition(&rep.crb, "measurement noise")?
            }
        };
        let posterior = if report.low_confidence || !r.iter().all(|v| v.is_finite()) {
            UpdateOutcome { track: prior.clone(), distance: f64::INFINITY, gated_out: true }
        } else {
            update(&prior, &report.estimate.to_vector(), &r, self.config.gate)?
        };
        if posterior.gated_out {
            self.coasts += 1;
        } else {
            self.coasts = 0;
        }

        let dt = self.clock.cpi_duration();
        let q = self.config.noise.process_noise(posterior.track.mean[1], dt);
        let (next, valid) = predict(&posterior.track, dt, &q, self.config.angle_update)?;
        if !valid {
            self.coasts += 1;
        }
        let outcome = CpiOutcome {
            report,
            prior_mean: prior.mean,
            prior_covariance: prior.covariance,
            posterior_mean: posterior.track.mean,
            posterior_covariance: posterior.track.covariance,
            measurement_noise: r,
            gated_out: posterior.gated_out,
        };
        self.track = TrackState {
            mean: posterior.track.mean,
            covariance: posterior.track.covariance,
            cpi_index: next.cpi_index,
            predicted_mean: next.mean,
            predicted_covariance: next.covariance,
        };
        if self.coasts > self.config.max_coasts {
            self.lost = true;
        }
        Ok(outcome)
    }
}

/// Normalized estimation error squared of `mean` against `truth`.
pub fn nees(mean: &Vector4<f64>, covariance: &Matrix4<f64>, truth: &Vector4<f64>) -> Option<f64> {
    let mut e = mean - truth;
    e[0] = wrap_angle(e[0]);
    let inv = covariance.try_inverse()?;
    Some((e.transpose() * inv * e)[(0, 0)])
}
