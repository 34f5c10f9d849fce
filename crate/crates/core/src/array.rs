//! Uniform linear array geometry and steering vectors.
//!
//! Elements lie on the x-axis, centered on the origin, which is also the phase
//! reference. A target is described in polar coordinates: angle measured from
//! the positive x-axis and distance from the array center.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Complex;

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    num_elements: usize,
    carrier_frequency: f64,
    element_spacing: f64,
}

impl ArrayConfig {
    /// Half-wavelength spaced array.
    pub fn new(num_elements: usize, carrier_frequency: f64) -> Result<Self> {
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(Error::invalid("carrier_frequency", "must be positive"));
        }
        let spacing = SPEED_OF_LIGHT / carrier_frequency / 2.0;
        Self::with_spacing(num_elements, carrier_frequency, spacing)
    }

    pub fn with_spacing(num_elements: usize, carrier_frequency: f64, element_spacing: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(Error::invalid("num_elements", "need at least 2 elements"));
        }
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(Error::invalid("carrier_frequency", "must be positive"));
        }
        if !(element_spacing > 0.0 && element_spacing.is_finite()) {
            return Err(Error::invalid("element_spacing", "must be positive"));
        }
        Ok(Self { num_elements, carrier_frequency, element_spacing })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Centered index of element `i`: runs from -(N-1)/2 to (N-1)/2.
    pub fn element_index(&self, i: usize) -> f64 {
        i as f64 - (self.num_elements as f64 - 1.0) / 2.0
    }

    /// x-coordinate of element `i` in meters.
    pub fn element_x(&self, i: usize) -> f64 {
        self.element_index(i) * self.element_spacing
    }

    /// Element positions `(x, 0)`, symmetric about the origin.
    pub fn element_positions(&self) -> Vec<[f64; 2]> {
        (0..self.num_elements).map(|i| [self.element_x(i), 0.0]).collect()
    }

    /// Aperture D = (N-1)d.
    pub fn aperture(&self) -> f64 {
        (self.num_elements as f64 - 1.0) * self.element_spacing
    }

    /// Near/far-field boundary 2D²/λ.
    pub fn rayleigh_distance(&self) -> f64 {
        let d = self.aperture();
        2.0 * d * d / self.wavelength()
    }

    /// Exact distance from element `i` to the target.
    pub fn element_target_distance(&self, loc: &PolarLocation, i: usize) -> f64 {
        loc.r + self.excess_path(loc, i)
    }

    /// `r_i - r`, computed without cancellation.
    pub fn excess_path(&self, loc: &PolarLocation, i: usize) -> f64 {
        let x = self.element_x(i);
        let num = x * x - 2.0 * loc.r * x * loc.theta.cos();
        let rn = (loc.r * loc.r + num).sqrt();
        num / (rn + loc.r)
    }

    /// Spherical-wave steering vector, entry i = exp(-j k (r_i - r)).
    pub fn nearfield_steering(&self, loc: &PolarLocation) -> Vec<Complex> {
        let k = self.wavenumber();
        (0..self.num_elements).map(|i| Complex::from_polar(1.0, -k * self.excess_path(loc, i))).collect()
    }

    /// Planar-wave steering vector, entry i = exp(+j k x_i cos θ).
    pub fn farfield_steering(&self, theta: f64) -> Vec<Complex> {
        let k = self.wavenumber();
        let c = theta.cos();
        (0..self.num_elements).map(|i| Complex::from_polar(1.0, k * self.element_x(i) * c)).collect()
    }

    /// Largest unwrapped phase difference between the near- and far-field
    /// models over the aperture (radians).
    pub fn max_phase_gap(&self, loc: &PolarLocation) -> f64 {
        let k = self.wavenumber();
        let c = loc.theta.cos();
        (0..self.num_elements)
            .map(|i| (k * (self.excess_path(loc, i) + self.element_x(i) * c)).abs())
            .fold(0.0, f64::max)
    }
}

/// Target location in front of the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarLocation {
    /// Angle from the positive x-axis, in (0, π).
    pub theta: f64,
    /// Distance to the array center, meters.
    pub r: f64,
}

impl PolarLocation {
    pub fn new(theta: f64, r: f64) -> Result<Self> {
        let loc = Self { theta, r };
        if loc.is_valid() {
            Ok(loc)
        } else {
            Err(Error::OutsideRegion { theta, r })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.r > 0.0 && self.r.is_finite() && self.theta > 0.0 && self.theta < PI
    }

    pub fn to_cartesian(&self) -> [f64; 2] {
        [self.r * self.theta.cos(), self.r * self.theta.sin()]
    }

    pub fn from_cartesian(p: [f64; 2]) -> Result<Self> {
        Self::new(p[1].atan2(p[0]), p[0].hypot(p[1]))
    }
}
