//! Monostatic echo synthesis over one CPI.
//!
//! Each snapshot uses the exact element-to-target distances at that instant,
//! so Doppler (and its variation across the aperture) emerges from the
//! changing geometry alone.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{ArrayConfig, PolarLocation};
use crate::error::{Error, Result};
use crate::kinematics::{CpiClock, TargetState};
use crate::signature::Geometry;
use crate::{dbm_to_watts, Complex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathLossMode {
    /// Unit reflection, path loss factored out.
    #[default]
    UnitReflection,
    /// Two-way free-space spreading with unit radar cross-section.
    RadarEquation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Watts.
    pub transmit_power: f64,
    /// Per complex sample, watts.
    pub noise_power: f64,
    pub path_loss_mode: PathLossMode,
}

impl LinkBudget {
    pub fn from_dbm(tx_dbm: f64, noise_dbm: f64, path_loss_mode: PathLossMode) -> Result<Self> {
        let budget = Self {
            transmit_power: dbm_to_watts(tx_dbm),
            noise_power: dbm_to_watts(noise_dbm),
            path_loss_mode,
        };
        if !(budget.transmit_power > 0.0 && budget.transmit_power.is_finite()) {
            return Err(Error::invalid("transmit_power", "must be positive"));
        }
        if !(budget.noise_power > 0.0 && budget.noise_power.is_finite()) {
            return Err(Error::invalid("noise_power", "must be positive"));
        }
        Ok(budget)
    }
}

/// Complex reflection coefficient of the target.
pub fn reflection_coefficient(loc: &PolarLocation, budget: &LinkBudget, wavelength: f64) -> Complex {
    match budget.path_loss_mode {
        PathLossMode::UnitReflection => Complex::new(1.0, 0.0),
        PathLossMode::RadarEquation => Complex::new(wavelength / ((4.0 * PI).powf(1.5) * loc.r * loc.r), 0.0),
    }
}

/// Unit-modulus probe with uniformly random phases.
pub fn unit_probe<R: Rng + ?Sized>(snapshots: usize, rng: &mut R) -> Vec<Complex> {
    (0..snapshots).map(|_| Complex::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))).collect()
}

/// Received samples for one CPI together with what was transmitted.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoFrame {
    /// N elements × M snapshots.
    pub samples: DMatrix<Complex>,
    pub probe: Vec<Complex>,
    pub transmit_weights: Vec<Complex>,
    /// Noise variance per complex sample (watts).
    pub noise_power: f64,
    /// Ground-truth reflection, kept for bookkeeping only.
    pub reflection: Complex,
}

impl EchoFrame {
    /// Column-major stacking: entry `m·N + n`.
    pub fn stacked(&self) -> &[Complex] {
        self.samples.as_slice()
    }

    /// Adds circularly-symmetric complex Gaussian noise of variance `noise_power`.
    pub fn add_noise<R: Rng + ?Sized>(mut self, noise_power: f64, rng: &mut R) -> Result<Self> {
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return Err(Error::invalid("noise_power", "must be non-negative"));
        }
        if noise_power > 0.0 {
            let sd = (noise_power / 2.0).sqrt();
            for v in self.samples.iter_mut() {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *v += Complex::new(re * sd, im * sd);
            }
        }
        self.noise_power += noise_power;
        Ok(self)
    }
}

/// Noiseless round-trip echo: column m is
/// `β √P s(m) Σ_k w_k exp(-j k (r_k(m) + r_n(m)))` over receive elements n.
pub fn noiseless_echo(
    cfg: &ArrayConfig,
    clock: &CpiClock,
    states: &[TargetState],
    weights: &[Complex],
    probe: &[Complex],
    reflection: Complex,
    transmit_power: f64,
) -> Result<EchoFrame> {
    let n = cfg.num_elements();
    let m_count = clock.snapshots();
    if states.len() != m_count {
        return Err(Error::DimensionMismatch { expected: m_count, actual: states.len() });
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: weights.len() });
    }
    if probe.len() != m_count {
        return Err(Error::DimensionMismatch { expected: m_count, actual: probe.len() });
    }
    let wnorm: f64 = weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    if (wnorm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("transmit_weights", "must have unit norm"));
    }
    if !(transmit_power >= 0.0 && transmit_power.is_finite()) {
        return Err(Error::invalid("transmit_power", "must be non-negative"));
    }
    for s in states {
        if !s.location.is_valid() {
            return Err(Error::OutsideRegion { theta: s.theta(), r: s.r() });
        }
    }

    let geometry = Geometry::new(cfg);
    let amp = reflection * transmit_power.sqrt();
    let mut samples = DMatrix::from_element(n, m_count, Complex::new(0.0, 0.0));
    let mut a = vec![Complex::new(0.0, 0.0); n];
    for (m, state) in states.iter().enumerate() {
        geometry.steering_column(state.position(), state.r(), [0.0, 0.0], 0.0, &mut a);
        let gain: Complex = a.iter().zip(weights).map(|(x, w)| x * w).sum();
        let scale = amp * gain * probe[m];
        for (dst, x) in samples.column_mut(m).iter_mut().zip(&a) {
            *dst = x * scale;
        }
    }
    Ok(EchoFrame {
        samples,
        probe: probe.to_vec(),
        transmit_weights: weights.to_vec(),
        noise_power: 0.0,
        reflection,
    })
}
