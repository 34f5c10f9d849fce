//! Single-CPI maximum-likelihood estimation of the mobility status.
//!
//! The reflection coefficient enters the echo linearly, so it is solved in
//! closed form and the likelihood is concentrated onto (θ, r, v_r, v_θ). The
//! concentrated objective is evaluated on a 4-D grid over a search window and
//! the best cell is polished with a Nelder–Mead simplex confined to the window.

use nalgebra::{DMatrix, Matrix4, Vector4};
use rayon::prelude::*;

use crate::array::ArrayConfig;
use crate::crb::{crb_report, FdSteps};
use crate::echo::EchoFrame;
use crate::error::{Error, Result};
use crate::kinematics::{CpiClock, TargetState};
use crate::signature::{IntraCpiMotion, SignatureModel};
use crate::simplex::{self, SimplexOptions};
use crate::Complex;

/// Axis-aligned box of candidate states around a center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindow {
    pub center: TargetState,
    /// (rad, m, m/s, m/s); zero pins a parameter to the center.
    pub half_widths: [f64; 4],
    /// Odd grid counts per parameter, center included.
    pub counts: [usize; 4],
}

impl SearchWindow {
    pub fn new(center: TargetState, half_widths: [f64; 4], counts: [usize; 4]) -> Result<Self> {
        for i in 0..4 {
            if !(half_widths[i] >= 0.0 && half_widths[i].is_finite()) {
                return Err(Error::invalid("half_widths", "must be finite and non-negative"));
            }
            if counts[i] % 2 == 0 {
                return Err(Error::invalid("counts", "grid counts must be odd"));
            }
            if half_widths[i] > 0.0 && counts[i] < 3 {
                return Err(Error::invalid("counts", "need at least 3 points per open axis"));
            }
        }
        Ok(Self { center, half_widths, counts })
    }

    fn effective_counts(&self) -> [usize; 4] {
        std::array::from_fn(|i| if self.half_widths[i] > 0.0 { self.counts[i] } else { 1 })
    }

    pub fn grid_size(&self) -> usize {
        self.effective_counts().iter().product()
    }

    /// Grid values along axis `i`.
    pub fn axis(&self, i: usize) -> Vec<f64> {
        let c = self.center.to_vector()[i];
        let n = self.effective_counts()[i];
        if n == 1 {
            return vec![c];
        }
        let h = self.half_widths[i];
        (0..n).map(|k| c - h + 2.0 * h * k as f64 / (n - 1) as f64).collect()
    }

    pub fn spacing(&self, i: usize) -> f64 {
        let n = self.effective_counts()[i];
        if n == 1 {
            0.0
        } else {
            2.0 * self.half_widths[i] / (n - 1) as f64
        }
    }

    pub fn lower(&self) -> Vector4<f64> {
        self.center.to_vector() - Vector4::from(self.half_widths)
    }

    pub fn upper(&self) -> Vector4<f64> {
        self.center.to_vector() + Vector4::from(self.half_widths)
    }

    pub fn contains(&self, v: &Vector4<f64>) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        (0..4).all(|i| v[i] >= lo[i] && v[i] <= hi[i])
    }

    fn clamp(&self, v: &Vector4<f64>) -> (Vector4<f64>, bool) {
        let (lo, hi) = (self.lower(), self.upper());
        let mut out = *v;
        let mut clamped = false;
        for i in 0..4 {
            if out[i] < lo[i] {
                out[i] = lo[i];
                clamped = true;
            } else if out[i] > hi[i] {
                out[i] = hi[i];
                clamped = true;
            }
        }
        (out, clamped)
    }

    /// Grid point with the given linear index (θ slowest, v_θ fastest).
    fn point(&self, axes: &[Vec<f64>; 4], mut idx: usize) -> Vector4<f64> {
        let mut v = Vector4::zeros();
        for i in (0..4).rev() {
            let n = axes[i].len();
            v[i] = axes[i][idx % n];
            idx /= n;
        }
        v
    }
}

/// Builds search windows around a predicted state.
///
/// Half-widths cover `sigma_multiplier` standard deviations of the supplied
/// covariance, never less than the floors. Grid spacing is tied to the
/// resolution of the objective along each axis so that no main lobe falls
/// between grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPolicy {
    pub sigma_multiplier: f64,
    /// (rad, m, m/s, m/s).
    pub floors: [f64; 4],
    /// Grid spacing as a fraction of the resolution cell.
    pub resolution_fraction: f64,
    pub min_counts: [usize; 4],
    pub max_counts: [usize; 4],
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            sigma_multiplier: 3.0,
            floors: [0.2f64.to_radians(), 0.5, 1.0, 1.0],
            resolution_fraction: 0.5,
            min_counts: [3, 3, 3, 3],
            max_counts: [41, 15, 41, 15],
        }
    }
}

/// Approximate main-lobe width of the concentrated objective along each
/// parameter at `state`.
pub fn resolution_cells(cfg: &ArrayConfig, clock: &CpiClock, state: &TargetState) -> [f64; 4] {
    let lambda = cfg.wavelength();
    let d = cfg.aperture();
    let s = state.theta().sin().abs().max(1e-3);
    let r = state.r();
    let dt = clock.cpi_duration();
    [lambda / (d * s), lambda * r * r / (0.25 * d * d * s * s), lambda / (2.0 * dt), lambda * r / (d * dt)]
}

impl WindowPolicy {
    pub fn window(
        &self,
        cfg: &ArrayConfig,
        clock: &CpiClock,
        center: TargetState,
        covariance: Option<&Matrix4<f64>>,
    ) -> Result<SearchWindow> {
        let res = resolution_cells(cfg, clock, &center);
        let mut hw = [0.0; 4];
        let mut counts = [1; 4];
        for i in 0..4 {
            let sigma = covariance.map_or(0.0, |p| p[(i, i)].max(0.0).sqrt());
            hw[i] = (self.sigma_multiplier * sigma).max(self.floors[i]);
            if hw[i] > 0.0 {
                let step = self.resolution_fraction * res[i];
                let n = (2.0 * hw[i] / step).ceil() as usize + 1;
                let n = n.clamp(self.min_counts[i].max(3), self.max_counts[i].max(3));
                counts[i] = if n % 2 == 0 { n + 1 } else { n };
            }
        }
        // Keep the window in front of the array.
        let theta = center.theta();
        hw[0] = hw[0].min(0.999 * theta.min(std::f64::consts::PI - theta));
        hw[1] = hw[1].min(0.999 * center.r());
        SearchWindow::new(center, hw, counts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Relative objective spread at which the simplex stops.
    pub tolerance: f64,
    /// Objective spread, in units of the noise power, at which the simplex
    /// stops. Ignored for noiseless frames.
    pub noise_tolerance: f64,
    pub max_iterations: usize,
    /// Known transmit power (W), used to express the reflection estimate.
    pub transmit_power: f64,
    pub motion: IntraCpiMotion,
    pub fd_steps: FdSteps,
    /// False-alarm probability behind the low-confidence flag.
    pub false_alarm: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            noise_tolerance: 1e-3,
            max_iterations: 500,
            transmit_power: 1.0,
            motion: IntraCpiMotion::Continuous,
            fd_steps: FdSteps::default(),
            false_alarm: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: TargetState,
    /// Reflection coefficient estimate (transmit power removed).
    pub reflection: Complex,
    /// Concentrated likelihood at the estimate.
    pub objective: f64,
    /// CRB evaluated at the estimate.
    pub covariance: Matrix4<f64>,
    pub rcrb: Vector4<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Objective below the noise-only detection threshold.
    pub low_confidence: bool,
    pub grid_points: usize,
}

/// Objective level that pure noise exceeds with probability about
/// `false_alarm` when the best of `cells` grid cells is taken.
///
/// Under noise alone each cell's objective is σ²·Exp(1); the maximum of
/// `cells` such draws exceeds σ²·ln(cells / p) with probability ≈ p. The
/// refinement step adds roughly one more resolution cell per open axis,
/// covered by doubling the cell count.
pub fn detection_threshold(noise_power: f64, cells: usize, false_alarm: f64) -> f64 {
    noise_power * ((2 * cells.max(1)) as f64 / false_alarm).ln()
}

/// Concentrated objective |uᴴy|²/‖u‖² for a frame at `eta`.
pub fn concentrated_objective(model: &SignatureModel, frame: &EchoFrame, eta: &TargetState) -> Result<f64> {
    Ok(model.objective(frame.stacked(), eta)?.0)
}

/// Receiver-side model for a frame.
pub fn frame_model(
    cfg: &ArrayConfig,
    clock: &CpiClock,
    frame: &EchoFrame,
    motion: IntraCpiMotion,
) -> Result<SignatureModel> {
    SignatureModel::new(*cfg, *clock, frame.transmit_weights.clone(), frame.probe.clone(), motion)
}

/// Grid search over `window` followed by simplex refinement.
pub fn grid_then_refine(
    cfg: &ArrayConfig,
    clock: &CpiClock,
    frame: &EchoFrame,
    window: &SearchWindow,
    opts: &EstimatorOptions,
) -> Result<EstimateReport> {
    let model = frame_model(cfg, clock, frame, opts.motion)?;
    let y = frame.stacked();
    if y.len() != model.len() {
        return Err(Error::DimensionMismatch { expected: model.len(), actual: y.len() });
    }
    let eval = |v: &Vector4<f64>| -> Option<(f64, Complex)> {
        let s = TargetState::from_vector(v).ok()?;
        model.objective(y, &s).ok()
    };

    let axes: [Vec<f64>; 4] = std::array::from_fn(|i| window.axis(i));
    let total = window.grid_size();
    let values: Vec<Option<f64>> =
        (0..total).into_par_iter().map(|idx| eval(&window.point(&axes, idx)).map(|(j, _)| j)).collect();
    let mut best: Option<(usize, f64)> = None;
    for (idx, v) in values.iter().enumerate() {
        if let Some(j) = v {
            if best.map_or(true, |(_, b)| *j > b) {
                best = Some((idx, *j));
            }
        }
    }
    let (best_idx, best_val) = best.ok_or(Error::NoValidGridPoint)?;
    let start = window.point(&axes, best_idx);

    let active: Vec<usize> = (0..4).filter(|&i| window.half_widths[i] > 0.0).collect();
    let (mut point, mut iterations, mut converged) = (start, 0, true);
    if !active.is_empty() {
        let (start_val, start_amp) = eval(&start).ok_or(Error::NoValidGridPoint)?;
        let basis = search_basis(&model, &start, start_amp, window, &active, opts);
        let (scale, absolute_tolerance) = if frame.noise_power > 0.0 {
            (frame.noise_power, opts.noise_tolerance)
        } else if best_val > 0.0 {
            (best_val, 0.0)
        } else {
            (1.0, 0.0)
        };
        let to_state = |xi: &[f64]| -> Vector4<f64> {
            let mut v = start;
            for (j, x) in xi.iter().enumerate() {
                v += basis.column(j) * *x;
            }
            v
        };
        // Outside the window the objective is frozen at the boundary and a
        // quadratic penalty pulls the simplex back in.
        let objective = |xi: &[f64]| -> f64 {
            let raw = to_state(xi);
            let (v, _) = window.clamp(&raw);
            let excess: f64 = active.iter().map(|&i| ((raw[i] - v[i]) / window.half_widths[i]).powi(2)).sum();
            match eval(&v) {
                Some((j, _)) => -j / scale + excess,
                None => f64::INFINITY,
            }
        };
        let res = simplex::minimize(
            objective,
            &vec![0.0; active.len()],
            &SimplexOptions {
                initial_step: 1.0,
                tolerance: opts.tolerance,
                absolute_tolerance,
                max_iterations: opts.max_iterations,
                restart: true,
            },
        );
        let (clamped_point, clamped) = window.clamp(&to_state(&res.x));
        iterations = res.iterations;
        converged = res.converged && !clamped;
        point = if -res.value * scale >= start_val { clamped_point } else { start };
    }

    let estimate = TargetState::from_vector(&point)?;
    let (objective, amp) = model.objective(y, &estimate)?;
    let sqrt_p = opts.transmit_power.sqrt();
    let reflection = if sqrt_p > 0.0 { amp / sqrt_p } else { Complex::new(0.0, 0.0) };
    let (covariance, rcrb) = if frame.noise_power > 0.0 {
        let rep =
            crb_report(&model, &estimate, reflection, opts.transmit_power, frame.noise_power, opts.fd_steps);
        (rep.crb, rep.rcrb)
    } else {
        (Matrix4::zeros(), Vector4::zeros())
    };
    let low_confidence = objective <= detection_threshold(frame.noise_power, total, opts.false_alarm);
    Ok(EstimateReport {
        estimate,
        reflection,
        objective,
        covariance,
        rcrb,
        converged,
        iterations,
        low_confidence,
        grid_points: total,
    })
}

/// Columns span the open axes. Where the local CRB is available its Cholesky
/// factor whitens the objective's curvature; otherwise axes are scaled by the
/// grid spacing. The first simplex edge is about half a grid step.
fn search_basis(
    model: &SignatureModel,
    at: &Vector4<f64>,
    amp: Complex,
    window: &SearchWindow,
    active: &[usize],
    opts: &EstimatorOptions,
) -> DMatrix<f64> {
    let k = active.len();
    let steps: Vec<f64> = active
        .iter()
        .map(|&i| {
            let s = window.spacing(i);
            if s > 0.0 {
                s
            } else {
                window.half_widths[i]
            }
        })
        .collect();
    let fallback = DMatrix::from_fn(4, k, |row, col| if row == active[col] { 0.5 * steps[col] } else { 0.0 });
    let Ok(state) = TargetState::from_vector(at) else {
        return fallback;
    };
    if amp.norm() == 0.0 {
        return fallback;
    }
    let rep = crb_report(model, &state, amp, 1.0, 1.0, opts.fd_steps);
    let sub = DMatrix::from_fn(k, k, |a, b| rep.crb[(active[a], active[b])]);
    if rep.singular || sub.iter().any(|v| !v.is_finite()) {
        return fallback;
    }
    let Some(chol) = sub.clone().cholesky() else {
        return fallback;
    };
    let l = chol.l();
    // Scale so that no axis moves more than half a grid step per unit ξ.
    let mut shrink = f64::INFINITY;
    for (a, step) in steps.iter().enumerate() {
        let extent: f64 = (0..k).map(|b| l[(a, b)].abs()).fold(0.0, f64::max);
        if extent > 0.0 {
            shrink = shrink.min(0.5 * step / extent);
        }
    }
    if !shrink.is_finite() {
        return fallback;
    }
    DMatrix::from_fn(4, k, |row, col| match active.iter().position(|&i| i == row) {
        Some(a) => l[(a, col)] * shrink,
        None => 0.0,
    })
}

/// Coarse global search used when no prior is available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionGrid {
    pub theta_step: f64,
    pub range_points: usize,
    pub min_range: f64,
    /// Farthest range as a multiple of the Rayleigh distance.
    pub max_range_rayleigh: f64,
    /// Velocities span ±limit in steps of `velocity_step`.
    pub velocity_limit: f64,
    pub velocity_step: f64,
}

impl Default for AcquisitionGrid {
    fn default() -> Self {
        Self {
            theta_step: 1f64.to_radians(),
            range_points: 64,
            min_range: 1.0,
            max_range_rayleigh: 1.5,
            velocity_limit: 10.0,
            velocity_step: 1.0,
        }
    }
}

impl AcquisitionGrid {
    pub fn thetas(&self) -> Vec<f64> {
        let n = (std::f64::consts::PI / self.theta_step).ceil() as usize;
        (1..n).map(|i| i as f64 * self.theta_step).filter(|t| *t < std::f64::consts::PI).collect()
    }

    /// Uniform in 1/r from `min_range` out to `max_range_rayleigh`·d_R.
    pub fn ranges(&self, cfg: &ArrayConfig) -> Vec<f64> {
        let far = self.max_range_rayleigh * cfg.rayleigh_distance();
        let (a, b) = (1.0 / self.min_range, 1.0 / far.max(self.min_range));
        if self.range_points < 2 {
            return vec![self.min_range];
        }
        (0..self.range_points)
            .map(|i| 1.0 / (a + (b - a) * i as f64 / (self.range_points - 1) as f64))
            .collect()
    }

    pub fn velocities(&self) -> Vec<f64> {
        let n = (self.velocity_limit / self.velocity_step).round() as i64;
        (-n..=n).map(|i| i as f64 * self.velocity_step).collect()
    }
}

/// Global search followed by a local [`grid_then_refine`].
///
/// The coarse stage scores every (θ, r, v_r) cell with a stationary steering
/// vector and a uniform Doppler ramp (v_θ = 0); transverse velocity is only
/// resolved in the local stage, whose window spans one coarse cell around the
/// winner and the full transverse-velocity range.
pub fn acquire(
    cfg: &ArrayConfig,
    clock: &CpiClock,
    frame: &EchoFrame,
    grid: &AcquisitionGrid,
    policy: &WindowPolicy,
    opts: &EstimatorOptions,
) -> Result<EstimateReport> {
    let n = cfg.num_elements();
    let m_count = clock.snapshots();
    if frame.samples.nrows() != n || frame.samples.ncols() != m_count {
        return Err(Error::DimensionMismatch { expected: n * m_count, actual: frame.samples.len() });
    }
    let thetas = grid.thetas();
    let ranges = grid.ranges(cfg);
    let vels = grid.velocities();
    let k2 = 2.0 * cfg.wavenumber();
    let ts = clock.snapshot_period();
    // Doppler correlators, one row per radial velocity.
    let ramps: Vec<Vec<Complex>> = vels
        .iter()
        .map(|v| {
            (0..m_count)
                .map(|m| Complex::from_polar(1.0, k2 * v * m as f64 * ts) * frame.probe[m].conj())
                .collect()
        })
        .collect();
    let cells: Vec<(usize, usize)> =
        (0..thetas.len()).flat_map(|i| (0..ranges.len()).map(move |j| (i, j))).collect();
    let scores: Vec<(f64, usize)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let Ok(loc) = crate::array::PolarLocation::new(thetas[i], ranges[j]) else {
                return (f64::NEG_INFINITY, 0);
            };
            let a = cfg.nearfield_steering(&loc);
            let z: Vec<Complex> = (0..m_count)
                .map(|m| frame.samples.column(m).iter().zip(&a).map(|(y, x)| x.conj() * y).sum())
                .collect();
            let mut best = (f64::NEG_INFINITY, 0);
            for (vi, ramp) in ramps.iter().enumerate() {
                let s: Complex = z.iter().zip(ramp).map(|(a, b)| a * b).sum();
                if s.norm_sqr() > best.0 {
                    best = (s.norm_sqr(), vi);
                }
            }
            best
        })
        .collect();
    let mut winner: Option<(usize, f64, usize)> = None;
    for (c, &(s, vi)) in scores.iter().enumerate() {
        if s.is_finite() && winner.map_or(true, |(_, b, _)| s > b) {
            winner = Some((c, s, vi));
        }
    }
    let (c, _, vi) = winner.ok_or(Error::NoValidGridPoint)?;
    let (i, j) = cells[c];
    let center = TargetState::new(thetas[i], ranges[j], vels[vi], 0.0)?;

    let r_step = {
        let lo = if j > 0 { ranges[j - 1] } else { ranges[j] };
        let hi = if j + 1 < ranges.len() { ranges[j + 1] } else { ranges[j] };
        (hi - lo).abs().max(f64::EPSILON) / 2.0
    };
    let local = WindowPolicy {
        floors: [grid.theta_step, r_step, grid.velocity_step, grid.velocity_limit],
        ..*policy
    };
    let window = local.window(cfg, clock, center, None)?;
    let mut report = grid_then_refine(cfg, clock, frame, &window, opts)?;
    report.grid_points += cells.len() * vels.len();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::focus_weights;
    use crate::echo::{noiseless_echo, unit_probe};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cpi_states(start: TargetState, clock: &CpiClock) -> Vec<TargetState> {
        (0..clock.snapshots())
            .map(|m| start.propagate_cartesian(m as f64 * clock.snapshot_period()).unwrap())
            .collect()
    }

    fn frame(
        cfg: &ArrayConfig,
        clock: &CpiClock,
        truth: TargetState,
        focus: TargetState,
        seed: u64,
    ) -> EchoFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probe = unit_probe(clock.snapshots(), &mut rng);
        let w = focus_weights(cfg, &focus.location);
        noiseless_echo(cfg, clock, &cpi_states(truth, clock), &w, &probe, Complex::new(0.7, 0.2), 1.0)
            .unwrap()
    }

    #[test]
    fn window_validation() {
        let c = TargetState::new(1.0, 10.0, 0.0, 0.0).unwrap();
        assert!(SearchWindow::new(c, [0.1, 1.0, 1.0, 1.0], [3, 3, 4, 3]).is_err());
        assert!(SearchWindow::new(c, [0.1, 1.0, 1.0, 1.0], [3, 1, 3, 3]).is_err());
        assert!(SearchWindow::new(c, [-0.1, 1.0, 1.0, 1.0], [3, 3, 3, 3]).is_err());
        let w = SearchWindow::new(c, [0.1, 0.0, 1.0, 1.0], [3, 1, 5, 3]).unwrap();
        assert_eq!(w.grid_size(), 45);
        assert_eq!(w.axis(2), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn zero_width_window_returns_center() {
        let cfg = ArrayConfig::new(32, 30e9).unwrap();
        let clock = CpiClock::new(0.01, 16).unwrap();
        let truth = TargetState::new(1.4, 12.0, 2.0, 1.0).unwrap();
        let f = frame(&cfg, &clock, truth, truth, 1);
        let w = SearchWindow::new(truth, [0.0; 4], [1; 4]).unwrap();
        let rep = grid_then_refine(&cfg, &clock, &f, &w, &EstimatorOptions::default()).unwrap();
        assert_eq!(rep.estimate, truth);
        assert_eq!(rep.grid_points, 1);
        assert!(rep.converged);
    }

    #[test]
    fn noiseless_recovery_case_study_array() {
        let cfg = ArrayConfig::new(256, 30e9).unwrap();
        let clock = CpiClock::new(0.01, 64).unwrap();
        let truth = TargetState::new(PI / 2.0 + 0.01, 20.0, 3.0, 2.0).unwrap();
        let center = TargetState::new(PI / 2.0 + 0.0115, 20.3, 2.6, 2.5).unwrap();
        let f = frame(&cfg, &clock, truth, center, 2);
        let window = WindowPolicy::default().window(&cfg, &clock, center, None).unwrap();
        assert!(window.contains(&truth.to_vector()));
        let rep = grid_then_refine(&cfg, &clock, &f, &window, &EstimatorOptions::default()).unwrap();
        let e = rep.estimate;
        assert!((e.theta() - truth.theta()).abs() < 1e-5, "θ err {}", e.theta() - truth.theta());
        assert!((e.r() - truth.r()).abs() < 1e-3, "r err {}", e.r() - truth.r());
        assert!((e.radial_velocity - 3.0).abs() < 1e-3);
        assert!((e.transverse_velocity - 2.0).abs() < 1e-2);
        assert!((rep.reflection.norm() - Complex::new(0.7, 0.2).norm()).abs() < 1e-4);
    }

    #[test]
    fn policy_respects_floors_and_region() {
        let cfg = ArrayConfig::new(256, 30e9).unwrap();
        let clock = CpiClock::new(0.01, 64).unwrap();
        let c = TargetState::new(PI / 2.0, 20.0, 0.0, 0.0).unwrap();
        let w = WindowPolicy::default().window(&cfg, &clock, c, None).unwrap();
        assert!((w.half_widths[0] - 0.2f64.to_radians()).abs() < 1e-15);
        assert_eq!(w.half_widths[1..], [0.5, 1.0, 1.0]);
        for i in 0..4 {
            assert!(w.counts[i] % 2 == 1 && w.counts[i] >= 3);
        }
        let p = Matrix4::from_diagonal(&Vector4::new(1e-4, 4.0, 1.0, 1.0));
        let w = WindowPolicy::default().window(&cfg, &clock, c, Some(&p)).unwrap();
        assert!((w.half_widths[1] - 6.0).abs() < 1e-12);
        assert!((w.half_widths[0] - 0.03).abs() < 1e-12);

        let edge = TargetState::new(0.001, 0.2, 0.0, 0.0).unwrap();
        let w = WindowPolicy::default().window(&cfg, &clock, edge, None).unwrap();
        assert!(w.lower()[0] > 0.0 && w.lower()[1] > 0.0);
    }

    #[test]
    fn acquisition_grid_layout() {
        let cfg = ArrayConfig::new(256, 30e9).unwrap();
        let g = AcquisitionGrid::default();
        assert_eq!(g.thetas().len(), 179);
        let r = g.ranges(&cfg);
        assert_eq!(r.len(), 64);
        assert!((r[0] - 1.0).abs() < 1e-12);
        assert!((r[63] - 1.5 * cfg.rayleigh_distance()).abs() < 1e-9);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        let inv: Vec<f64> = r.iter().map(|x| 1.0 / x).collect();
        assert!((inv[1] - inv[0] - (inv[63] - inv[62])).abs() < 1e-12);
        assert_eq!(g.velocities().len(), 21);
    }

    #[test]
    fn acquisition_finds_target_without_prior() {
        let cfg = ArrayConfig::new(64, 30e9).unwrap();
        let clock = CpiClock::new(0.01, 32).unwrap();
        let truth = TargetState::new(1.2, 4.0, -2.3, 1.5).unwrap();
        let f = frame(&cfg, &clock, truth, truth, 4);
        let rep = acquire(
            &cfg,
            &clock,
            &f,
            &AcquisitionGrid::default(),
            &WindowPolicy::default(),
            &EstimatorOptions::default(),
        )
        .unwrap();
        let e = rep.estimate;
        assert!((e.theta() - truth.theta()).abs() < 1e-4, "{e:?}");
        assert!((e.r() - truth.r()).abs() < 1e-2, "{e:?}");
        assert!((e.radial_velocity - truth.radial_velocity).abs() < 1e-2, "{e:?}");
        assert!((e.transverse_velocity - truth.transverse_velocity).abs() < 0.5, "{e:?}");
    }

    #[test]
    fn pure_noise_is_low_confidence() {
        let cfg = ArrayConfig::new(64, 30e9).unwrap();
        let clock = CpiClock::new(0.01, 16).unwrap();
        let c = TargetState::new(1.4, 10.0, 1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let probe = unit_probe(16, &mut rng);
        let w = focus_weights(&cfg, &c.location);
        let empty = noiseless_echo(&cfg, &clock, &[c; 16], &w, &probe, Complex::new(0.0, 0.0), 1.0).unwrap();
        let window = WindowPolicy::default().window(&cfg, &clock, c, None).unwrap();
        let mut flagged = 0;
        for seed in 0..10 {
            let f = empty.clone().add_noise(2.0, &mut ChaCha8Rng::seed_from_u64(100 + seed)).unwrap();
            let rep = grid_then_refine(&cfg, &clock, &f, &window, &EstimatorOptions::default()).unwrap();
            assert!(rep.objective.is_finite() && rep.objective > 0.0);
            flagged += rep.low_confidence as usize;
        }
        assert!(flagged >= 9, "flagged {flagged}");
    }
}
