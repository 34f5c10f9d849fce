//! Round-trip echo model shared by echo synthesis and the estimator.
//!
//! A snapshot column is `a ⊙ (aᵀw) · s(m)` where `a` is the one-way spherical
//! steering vector towards the target at that snapshot: transmit through the
//! beam `w`, reflect, and receive on every element.

use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use crate::kinematics::{CpiClock, TargetState};
use crate::phasor::cis_neg_into;
use crate::Complex;

/// How the target moves inside one CPI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntraCpiMotion {
    /// Constant Cartesian velocity from the CPI-start state.
    #[default]
    Continuous,
    /// Geometry held at the CPI-start state for the whole CPI.
    Frozen,
}

/// Per-element geometry cache for fast column evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    k: f64,
    xs: Vec<f64>,
}

impl Geometry {
    pub(crate) fn new(cfg: &ArrayConfig) -> Self {
        Self { k: cfg.wavenumber(), xs: (0..cfg.num_elements()).map(|i| cfg.element_x(i)).collect() }
    }

    /// Fills `out[n] = k (|p0 + shift - x_n| - reference)`, where `p0` lies at
    /// distance `r0` from the origin.
    ///
    /// The excess path is formed from `|p|² - reference²` expanded around
    /// `p0`, so it keeps full precision when `reference ≈ r0`.
    #[inline]
    pub(crate) fn phases(&self, p0: [f64; 2], r0: f64, shift: [f64; 2], reference: f64, out: &mut [f64]) {
        let base = r0 * r0 - reference * reference;
        let (sx, qy) = (shift[0], shift[1]);
        let cy = base + 2.0 * p0[1] * qy + qy * qy;
        let py = p0[1] + qy;
        for (x, out) in self.xs.iter().zip(out.iter_mut()) {
            let qx = sx - x;
            let num = cy + 2.0 * p0[0] * qx + qx * qx;
            let px = p0[0] + qx;
            let dist = (px * px + py * py).sqrt();
            *out = self.k * num / (dist + reference);
        }
    }

    /// `a[n] = exp(-j k (|p0 + shift - x_n| - reference))`.
    pub(crate) fn steering_column(
        &self,
        p0: [f64; 2],
        r0: f64,
        shift: [f64; 2],
        reference: f64,
        a: &mut [Complex],
    ) {
        let mut buf = ColumnBuffer::new(self.xs.len());
        self.fill(p0, r0, shift, reference, &mut buf);
        for (i, out) in a.iter_mut().enumerate() {
            *out = Complex::new(buf.re[i], buf.im[i]);
        }
    }

    #[inline]
    fn fill(&self, p0: [f64; 2], r0: f64, shift: [f64; 2], reference: f64, buf: &mut ColumnBuffer) {
        self.phases(p0, r0, shift, reference, &mut buf.phase);
        cis_neg_into(&buf.phase, &mut buf.re, &mut buf.im);
    }
}

/// Split real/imaginary scratch for one steering column.
#[derive(Debug, Clone)]
struct ColumnBuffer {
    phase: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ColumnBuffer {
    fn new(n: usize) -> Self {
        Self { phase: vec![0.0; n], re: vec![0.0; n], im: vec![0.0; n] }
    }
}

const LANES: usize = 4;

/// Σ a·w over split vectors, with independent partial sums per lane.
#[inline]
fn dot(are: &[f64], aim: &[f64], wre: &[f64], wim: &[f64]) -> Complex {
    let mut sr = [0.0; LANES];
    let mut si = [0.0; LANES];
    let n = are.len() / LANES * LANES;
    for c in (0..n).step_by(LANES) {
        for l in 0..LANES {
            let i = c + l;
            sr[l] += are[i] * wre[i] - aim[i] * wim[i];
            si[l] += are[i] * wim[i] + aim[i] * wre[i];
        }
    }
    let mut out = Complex::new(sr.iter().sum(), si.iter().sum());
    for i in n..are.len() {
        out += Complex::new(are[i] * wre[i] - aim[i] * wim[i], are[i] * wim[i] + aim[i] * wre[i]);
    }
    out
}

/// Σ conj(a)·y with `y` interleaved.
#[inline]
fn dot_conj(are: &[f64], aim: &[f64], y: &[Complex]) -> Complex {
    let mut sr = [0.0; LANES];
    let mut si = [0.0; LANES];
    let n = are.len() / LANES * LANES;
    for c in (0..n).step_by(LANES) {
        for l in 0..LANES {
            let i = c + l;
            let (yr, yi) = (y[i].re, y[i].im);
            sr[l] += are[i] * yr + aim[i] * yi;
            si[l] += are[i] * yi - aim[i] * yr;
        }
    }
    let mut out = Complex::new(sr.iter().sum(), si.iter().sum());
    for i in n..are.len() {
        let (yr, yi) = (y[i].re, y[i].im);
        out += Complex::new(are[i] * yr + aim[i] * yi, are[i] * yi - aim[i] * yr);
    }
    out
}

/// Everything the receiver knows about one CPI apart from the echo itself.
#[derive(Debug, Clone)]
pub struct SignatureModel {
    cfg: ArrayConfig,
    clock: CpiClock,
    weights: Vec<Complex>,
    probe: Vec<Complex>,
    motion: IntraCpiMotion,
    geometry: Geometry,
    weights_re: Vec<f64>,
    weights_im: Vec<f64>,
}

impl SignatureModel {
    pub fn new(
        cfg: ArrayConfig,
        clock: CpiClock,
        weights: Vec<Complex>,
        probe: Vec<Complex>,
        motion: IntraCpiMotion,
    ) -> Result<Self> {
        if weights.len() != cfg.num_elements() {
            return Err(Error::DimensionMismatch { expected: cfg.num_elements(), actual: weights.len() });
        }
        if probe.len() != clock.snapshots() {
            return Err(Error::DimensionMismatch { expected: clock.snapshots(), actual: probe.len() });
        }
        Ok(Self {
            geometry: Geometry::new(&cfg),
            weights_re: weights.iter().map(|w| w.re).collect(),
            weights_im: weights.iter().map(|w| w.im).collect(),
            cfg,
            clock,
            weights,
            probe,
            motion,
        })
    }

    pub fn array(&self) -> &ArrayConfig {
        &self.cfg
    }

    pub fn clock(&self) -> &CpiClock {
        &self.clock
    }

    pub fn weights(&self) -> &[Complex] {
        &self.weights
    }

    pub fn probe(&self) -> &[Complex] {
        &self.probe
    }

    pub fn motion(&self) -> IntraCpiMotion {
        self.motion
    }

    /// Same model with a different intra-CPI motion assumption.
    pub fn with_motion(mut self, motion: IntraCpiMotion) -> Self {
        self.motion = motion;
        self
    }

    /// Length of the stacked signature, N·M.
    pub fn len(&self) -> usize {
        self.cfg.num_elements() * self.clock.snapshots()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits each snapshot's split steering column and beam response `aᵀw`.
    ///
    /// Phases are referenced to the state's own range, i.e. the common factor
    /// exp(-j 2kr) is left to the complex reflection coefficient.
    fn for_each_column(&self, state: &TargetState, mut visit: impl FnMut(usize, &[f64], &[f64], Complex)) {
        let n = self.cfg.num_elements();
        let p0 = state.position();
        let r0 = state.r();
        let v = match self.motion {
            IntraCpiMotion::Continuous => state.velocity_to_cartesian(),
            IntraCpiMotion::Frozen => [0.0, 0.0],
        };
        let ts = self.clock.snapshot_period();
        let mut buf = ColumnBuffer::new(n);
        for m in 0..self.clock.snapshots() {
            let t = m as f64 * ts;
            self.geometry.fill(p0, r0, [v[0] * t, v[1] * t], r0, &mut buf);
            let gain = dot(&buf.re, &buf.im, &self.weights_re, &self.weights_im);
            visit(m, &buf.re, &buf.im, gain);
        }
    }

    /// Stacked noiseless echo (unit reflection, unit power) for state `eta`;
    /// entry `m·N + n` is element n at snapshot m.
    pub fn signature(&self, eta: &TargetState) -> Vec<Complex> {
        let n = self.cfg.num_elements();
        let mut out = vec![Complex::new(0.0, 0.0); self.len()];
        self.for_each_column(eta, |m, re, im, gain| {
            let scale = gain * self.probe[m];
            for (i, o) in out[m * n..(m + 1) * n].iter_mut().enumerate() {
                *o = Complex::new(re[i], im[i]) * scale;
            }
        });
        out
    }

    /// Concentrated likelihood |uᴴy|² / ‖u‖² and the implied amplitude
    /// uᴴy / ‖u‖² for stacked data `y`.
    pub fn objective(&self, y: &[Complex], eta: &TargetState) -> Result<(f64, Complex)> {
        let n = self.cfg.num_elements();
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: y.len() });
        }
        let mut corr = Complex::new(0.0, 0.0);
        let mut energy = 0.0;
        self.for_each_column(eta, |m, re, im, gain| {
            let z = dot_conj(re, im, &y[m * n..(m + 1) * n]);
            corr += (gain * self.probe[m]).conj() * z;
            energy += gain.norm_sqr();
        });
        let energy = energy * n as f64;
        if !(energy > 1e-24 * (n * n * self.clock.snapshots()) as f64) {
            return Err(Error::DegenerateSignature);
        }
        Ok((corr.norm_sqr() / energy, corr / energy))
    }

    /// ‖u(eta)‖².
    pub fn energy(&self, eta: &TargetState) -> f64 {
        let mut energy = 0.0;
        self.for_each_column(eta, |_, _, _, gain| energy += gain.norm_sqr());
        energy * self.cfg.num_elements() as f64
    }
}
