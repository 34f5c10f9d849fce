//! Predictive beam focusing with per-antenna Doppler compensation, and the
//! downlink metrics used to score it.

use nalgebra::DMatrix;

use crate::array::{ArrayConfig, PolarLocation};
use crate::echo::LinkBudget;
use crate::kinematics::{CpiClock, TargetState};
use crate::{to_db, Complex};

/// Conjugate-matched focusing beam, `conj(a(θ, r)) / √N`.
pub fn focus_weights(cfg: &ArrayConfig, loc: &PolarLocation) -> Vec<Complex> {
    let scale = 1.0 / (cfg.num_elements() as f64).sqrt();
    cfg.nearfield_steering(loc).into_iter().map(|a| a.conj() * scale).collect()
}

/// Range rate from element `i` to the target under its Cartesian velocity.
pub fn element_range_rate(cfg: &ArrayConfig, state: &TargetState, i: usize) -> f64 {
    let p = state.position();
    let v = state.velocity_to_cartesian();
    let dx = p[0] - cfg.element_x(i);
    let dy = p[1];
    (v[0] * dx + v[1] * dy) / dx.hypot(dy)
}

/// Per-antenna phase ramps (N × M, radians): entry (n, m) is
/// `k (ṙ_n + ṙ_0) m T_s`, with ṙ_0 the range rate to the array center.
pub fn doppler_ramps(cfg: &ArrayConfig, clock: &CpiClock, predicted: &TargetState) -> DMatrix<f64> {
    let k = cfg.wavenumber();
    let ts = clock.snapshot_period();
    let center_rate = predicted.radial_velocity;
    let rates: Vec<f64> =
        (0..cfg.num_elements()).map(|i| element_range_rate(cfg, predicted, i) + center_rate).collect();
    DMatrix::from_fn(cfg.num_elements(), clock.snapshots(), |n, m| k * rates[n] * m as f64 * ts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPlan {
    /// Unit-norm focusing weights.
    pub base_weights: Vec<Complex>,
    /// N × M phase ramps (radians).
    pub ramps: DMatrix<f64>,
    pub predicted_state: TargetState,
}

impl BeamPlan {
    /// Focus at the predicted location; ramps are zero unless
    /// `compensate_doppler` is set.
    pub fn new(
        cfg: &ArrayConfig,
        clock: &CpiClock,
        predicted: TargetState,
        compensate_doppler: bool,
    ) -> Self {
        let ramps = if compensate_doppler {
            doppler_ramps(cfg, clock, &predicted)
        } else {
            DMatrix::zeros(cfg.num_elements(), clock.snapshots())
        };
        Self { base_weights: focus_weights(cfg, &predicted.location), ramps, predicted_state: predicted }
    }

    /// Transmit weights applied at snapshot `m`.
    pub fn weights_at(&self, m: usize) -> Vec<Complex> {
        self.base_weights
            .iter()
            .zip(self.ramps.column(m).iter())
            .map(|(w, phi)| w * Complex::from_polar(1.0, *phi))
            .collect()
    }
}

/// Downlink performance of a plan over one CPI.
#[derive(Debug, Clone, PartialEq)]
pub struct CommMetrics {
    /// |a_true(m)ᵀ w(m)|² per snapshot.
    pub gains: Vec<f64>,
    /// bits/s/Hz per snapshot.
    pub rates: Vec<f64>,
    pub genie_gains: Vec<f64>,
    pub genie_rates: Vec<f64>,
    /// 10 log10(genie mean gain / achieved mean gain).
    pub gain_loss_db: f64,
}

impl CommMetrics {
    pub fn mean_gain(&self) -> f64 {
        mean(&self.gains)
    }

    pub fn mean_rate(&self) -> f64 {
        mean(&self.rates)
    }

    pub fn genie_mean_rate(&self) -> f64 {
        mean(&self.genie_rates)
    }

    /// Peak-to-trough gain variation over the CPI in dB.
    pub fn ripple_db(&self) -> f64 {
        let max = self.gains.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.gains.iter().cloned().fold(f64::MAX, f64::min);
        to_db(max / min)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Scores `plan` against the true per-snapshot states. The genie re-focuses on
/// the true state at every snapshot. The downlink channel is the one-way
/// steering vector with unit gain.
pub fn comm_metrics(
    cfg: &ArrayConfig,
    true_states: &[TargetState],
    plan: &BeamPlan,
    budget: &LinkBudget,
) -> CommMetrics {
    let snr = budget.transmit_power / budget.noise_power;
    let rate = |g: f64| (1.0 + snr * g).log2();
    let mut gains = Vec::with_capacity(true_states.len());
    let mut genie_gains = Vec::with_capacity(true_states.len());
    for (m, state) in true_states.iter().enumerate() {
        let a = cfg.nearfield_steering(&state.location);
        let w = plan.weights_at(m);
        let g: Complex = a.iter().zip(&w).map(|(x, y)| x * y).sum();
        gains.push(g.norm_sqr());
        let genie = focus_weights(cfg, &state.location);
        let gg: Complex = a.iter().zip(&genie).map(|(x, y)| x * y).sum();
        genie_gains.push(gg.norm_sqr());
    }
    let rates = gains.iter().map(|g| rate(*g)).collect();
    let genie_rates = genie_gains.iter().map(|g| rate(*g)).collect();
    let gain_loss_db = to_db(mean(&genie_gains) / mean(&gains));
    CommMetrics { gains, rates, genie_gains, genie_rates, gain_loss_db }
}
