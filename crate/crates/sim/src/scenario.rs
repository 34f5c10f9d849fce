//! The closed sense / track / predict / beamform loop over a ground-truth path.

use nalgebra::{Matrix4, Vector4};
use nfpb_core::beamformer::{comm_metrics, BeamPlan};
use nfpb_core::echo::{noiseless_echo, reflection_coefficient, unit_probe};
use nfpb_core::rng::{SeedStream, NOISE, PROBE, TRAJECTORY_INIT};
use nfpb_core::tracker::Tracker;
use nfpb_core::{Error, TargetState};
use rand_distr::{Distribution, StandardNormal};

use crate::config::ScenarioConfig;

/// One CPI of a track run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub cpi_index: usize,
    /// True state at the start of the CPI.
    pub truth: Vector4<f64>,
    pub estimate: Vector4<f64>,
    /// Prior the beam was focused on.
    pub predicted: Vector4<f64>,
    pub posterior: Vector4<f64>,
    pub rcrb: Vector4<f64>,
    pub gain_mean: f64,
    pub rate_mean: f64,
    pub genie_rate_mean: f64,
    pub gain_loss_db: f64,
    pub gated_out: bool,
}

pub const TRACK_HEADER: &str = "cpi_index,\
true_theta_rad,true_r_m,true_vr_mps,true_vtheta_mps,\
est_theta_rad,est_r_m,est_vr_mps,est_vtheta_mps,\
pred_theta_rad,pred_r_m,pred_vr_mps,pred_vtheta_mps,\
post_theta_rad,post_r_m,post_vr_mps,post_vtheta_mps,\
rcrb_theta_rad,rcrb_r_m,rcrb_vr_mps,rcrb_vtheta_mps,\
gain_mean,rate_mean_bps_hz,genie_rate_mean,gain_loss_db,gated_out";

impl RunRecord {
    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.cpi_index.to_string()];
        for v in [&self.truth, &self.estimate, &self.predicted, &self.posterior, &self.rcrb] {
            cols.extend(v.iter().map(|x| format!("{x}")));
        }
        cols.extend(
            [self.gain_mean, self.rate_mean, self.genie_rate_mean, self.gain_loss_db]
                .iter()
                .map(|x| format!("{x}")),
        );
        cols.push(u8::from(self.gated_out).to_string());
        cols.join(",")
    }

    /// Euclidean distance between the posterior and true positions.
    pub fn position_error(&self) -> f64 {
        let p = |v: &Vector4<f64>| [v[1] * v[0].cos(), v[1] * v[0].sin()];
        let (a, b) = (p(&self.posterior), p(&self.truth));
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    /// Posterior covariance per CPI, aligned with `records`.
    pub covariances: Vec<Matrix4<f64>>,
    /// CPI at which the track was declared lost.
    pub lost_at: Option<usize>,
    /// Runtime failure that ended the run early.
    pub failure: Option<String>,
}

/// Initial access: the true state at t = 0 perturbed by the configured noise,
/// with a covariance of four times the perturbation variance.
pub fn initial_access(cfg: &ScenarioConfig, seed: u64) -> Result<(Vector4<f64>, Matrix4<f64>), Error> {
    let truth = cfg.trajectory.state_at(0.0)?.to_vector();
    let mut rng = SeedStream::new(seed).substream(TRAJECTORY_INIT, 0);
    let sd = Vector4::from(cfg.initial_access.noise);
    let mut mean = truth;
    for i in 0..4 {
        let z: f64 = StandardNormal.sample(&mut rng);
        mean[i] += sd[i] * z;
    }
    let cov = Matrix4::from_diagonal(&sd.map(|s| 4.0 * s * s));
    TargetState::from_vector(&mean)?;
    Ok((mean, cov))
}

/// Runs the tracking loop for `cfg.num_cpis` CPIs.
pub fn run_nfpb(cfg: &ScenarioConfig, seed: u64) -> Result<RunOutput, Error> {
    let streams = SeedStream::new(seed);
    let (mean, cov) = initial_access(cfg, seed)?;
    let mut tracker = Tracker::new(cfg.array, cfg.clock, cfg.tracker, mean, cov)?;
    let lambda = cfg.array.wavelength();
    let mut out = RunOutput {
        records: Vec::with_capacity(cfg.num_cpis),
        covariances: Vec::with_capacity(cfg.num_cpis),
        lost_at: None,
        failure: None,
    };
    for k in 0..cfg.num_cpis {
        let prior = tracker.prior()?;
        let plan = BeamPlan::new(&cfg.array, &cfg.clock, prior, true);
        let states = cfg.trajectory.sample_cpi(&cfg.clock, k)?;
        let probe = unit_probe(cfg.clock.snapshots(), &mut streams.substream(PROBE, k as u64));
        let beta = reflection_coefficient(&states[0].location, &cfg.budget, lambda);
        let frame = noiseless_echo(
            &cfg.array,
            &cfg.clock,
            &states,
            &plan.base_weights,
            &probe,
            beta,
            cfg.budget.transmit_power,
        )?
        .add_noise(cfg.budget.noise_power, &mut streams.substream(NOISE, k as u64))?;

        let step = match tracker.step(&frame) {
            Ok(s) => s,
            Err(e) => {
                out.failure = Some(e.to_string());
                return Ok(out);
            }
        };
        let metrics = comm_metrics(&cfg.array, &states, &plan, &cfg.budget);
        out.records.push(RunRecord {
            cpi_index: k,
            truth: states[0].to_vector(),
            estimate: step.report.estimate.to_vector(),
            predicted: step.prior_mean,
            posterior: step.posterior_mean,
            rcrb: step.report.rcrb,
            gain_mean: metrics.mean_gain(),
            rate_mean: metrics.mean_rate(),
            genie_rate_mean: metrics.genie_mean_rate(),
            gain_loss_db: metrics.gain_loss_db,
            gated_out: step.gated_out,
        });
        out.covariances.push(step.posterior_covariance);
        if tracker.is_lost() {
            out.lost_at = Some(k);
            return Ok(out);
        }
    }
    Ok(out)
}
