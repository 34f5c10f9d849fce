//! Single-shot experiments: bound sweeps, Monte Carlo efficiency and one-CPI
//! estimation from scratch.

use nalgebra::Vector4;
use nfpb_core::beamformer::focus_weights;
use nfpb_core::crb::{crb_report, rcrb_sweep, FdSteps, SweepRow, SweepSetup};
use nfpb_core::echo::{noiseless_echo, reflection_coefficient, unit_probe};
use nfpb_core::estimator::{acquire, grid_then_refine, AcquisitionGrid, EstimateReport};
use nfpb_core::rng::{SeedStream, NOISE, PROBE};
use nfpb_core::{Complex, Error, TargetState};
use rand::Rng;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::scenario::initial_access;

/// Stream for the random offset of Monte Carlo search windows.
pub const WINDOW: &str = "window";

pub const CRB_SWEEP_HEADER: &str =
    "r_m,rcrb_theta_rad,rcrb_r_m,rcrb_vr_mps,rcrb_vtheta_mps,condition_number,singular_flag";

pub fn crb_sweep(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<SweepRow>, Error> {
    let s = &cfg.sweep;
    let base = TargetState::new(
        s.theta,
        s.ranges.first().copied().unwrap_or(1.0),
        s.radial_velocity,
        s.transverse_velocity,
    )?;
    let probe = unit_probe(cfg.clock.snapshots(), &mut SeedStream::new(seed).substream(PROBE, 0));
    let mut setup = SweepSetup {
        array: cfg.array,
        clock: cfg.clock,
        probe,
        motion: cfg.motion,
        reflection: Complex::new(1.0, 0.0),
        transmit_power: cfg.budget.transmit_power,
        noise_power: cfg.budget.noise_power,
        steps: FdSteps::default(),
    };
    let lambda = cfg.array.wavelength();
    let mut rows = Vec::with_capacity(s.ranges.len());
    for &r in &s.ranges {
        let loc = nfpb_core::PolarLocation::new(s.theta, r)?;
        setup.reflection = reflection_coefficient(&loc, &cfg.budget, lambda);
        rows.extend(rcrb_sweep(&setup, &base, &[r])?);
    }
    Ok(rows)
}

pub fn sweep_row_csv(row: &SweepRow) -> String {
    let v = &row.report.rcrb;
    format!(
        "{},{},{},{},{},{},{}",
        row.r,
        v[0],
        v[1],
        v[2],
        v[3],
        row.report.condition_number,
        u8::from(row.report.singular)
    )
}

pub const MC_HEADER: &str = "snr_db,param,rmse,rcrb,ratio,trials";
pub const PARAMS: [&str; 4] = ["theta", "r", "vr", "vtheta"];

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub snr_db: f64,
    pub param: &'static str,
    pub rmse: f64,
    pub rcrb: f64,
    pub trials: usize,
}

impl McRow {
    pub fn ratio(&self) -> f64 {
        self.rmse / self.rcrb
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{},{}", self.snr_db, self.param, self.rmse, self.rcrb, self.ratio(), self.trials)
    }
}

/// Per-trial estimation errors at one SNR point.
fn mc_errors(
    cfg: &ScenarioConfig,
    seed: u64,
    snr_index: usize,
    reflection: Complex,
    truth: &TargetState,
    crb: &nalgebra::Matrix4<f64>,
) -> Result<Vec<Vector4<f64>>, Error> {
    let streams = SeedStream::new(seed);
    let w = focus_weights(&cfg.array, &truth.location);
    let states: Vec<TargetState> = (0..cfg.clock.snapshots())
        .map(|m| truth.propagate_cartesian(m as f64 * cfg.clock.snapshot_period()))
        .collect::<Result<_, _>>()?;
    let policy = cfg.tracker.window;
    (0..cfg.mc.trials)
        .into_par_iter()
        .map(|t| {
            let index = ((snr_index as u64) << 32) | t as u64;
            let probe = unit_probe(cfg.clock.snapshots(), &mut streams.substream(PROBE, index));
            let frame = noiseless_echo(
                &cfg.array,
                &cfg.clock,
                &states,
                &w,
                &probe,
                reflection,
                cfg.budget.transmit_power,
            )?
            .add_noise(cfg.budget.noise_power, &mut streams.substream(NOISE, index))?;
            // Window sized from the bound, its center jittered by up to half
            // a grid step so the truth is not a grid point.
            let window = policy.window(&cfg.array, &cfg.clock, *truth, Some(crb))?;
            let mut rng = streams.substream(WINDOW, index);
            let mut center = truth.to_vector();
            for i in 0..4 {
                center[i] += window.spacing(i) * (rng.gen::<f64>() - 0.5);
            }
            let window = nfpb_core::SearchWindow::new(
                TargetState::from_vector(&center)?,
                window.half_widths,
                window.counts,
            )?;
            let rep = grid_then_refine(&cfg.array, &cfg.clock, &frame, &window, &cfg.tracker.estimator)?;
            Ok(rep.estimate.to_vector() - truth.to_vector())
        })
        .collect()
}

/// RMSE against the RCRB at each configured post-beamforming SNR.
///
/// The SNR fixes the reflection magnitude through P|β|²N²/σ².
pub fn run_mc_rmse(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<McRow>, Error> {
    let mc = &cfg.mc;
    if mc.trials == 0 {
        return Ok(Vec::new());
    }
    let truth = TargetState::new(mc.theta, mc.r, mc.radial_velocity, mc.transverse_velocity)?;
    let n = cfg.array.num_elements() as f64;
    let mut rows = Vec::new();
    for (s, &snr_db) in mc.snr_db.iter().enumerate() {
        let snr = 10f64.powf(snr_db / 10.0);
        let beta = (snr * cfg.budget.noise_power / (cfg.budget.transmit_power * n * n)).sqrt();
        let reflection = Complex::new(beta, 0.0);
        let probe = unit_probe(cfg.clock.snapshots(), &mut SeedStream::new(seed).substream(PROBE, 0));
        let model = nfpb_core::SignatureModel::new(
            cfg.array,
            cfg.clock,
            focus_weights(&cfg.array, &truth.location),
            probe,
            cfg.motion,
        )?;
        let bound = crb_report(
            &model,
            &truth,
            reflection,
            cfg.budget.transmit_power,
            cfg.budget.noise_power,
            FdSteps::default(),
        );
        let errors = mc_errors(cfg, seed, s, reflection, &truth, &bound.crb)?;
        for (i, param) in PARAMS.iter().enumerate() {
            let mse = errors.iter().map(|e| e[i] * e[i]).sum::<f64>() / errors.len() as f64;
            rows.push(McRow { snr_db, param, rmse: mse.sqrt(), rcrb: bound.rcrb[i], trials: errors.len() });
        }
    }
    Ok(rows)
}

pub const ESTIMATE_HEADER: &str = "true_theta_rad,true_r_m,true_vr_mps,true_vtheta_mps,\
est_theta_rad,est_r_m,est_vr_mps,est_vtheta_mps,\
rcrb_theta_rad,rcrb_r_m,rcrb_vr_mps,rcrb_vtheta_mps,\
reflection_abs,objective,converged,low_confidence";

#[derive(Debug, Clone)]
pub struct OnceOutput {
    pub truth: TargetState,
    pub report: EstimateReport,
}

impl OnceOutput {
    pub fn csv_row(&self) -> String {
        let mut cols: Vec<String> = Vec::new();
        for v in [self.truth.to_vector(), self.report.estimate.to_vector(), self.report.rcrb] {
            cols.extend(v.iter().map(|x| format!("{x}")));
        }
        cols.push(format!("{}", self.report.reflection.norm()));
        cols.push(format!("{}", self.report.objective));
        cols.push(u8::from(self.report.converged).to_string());
        cols.push(u8::from(self.report.low_confidence).to_string());
        cols.join(",")
    }
}

/// First CPI of the configured trajectory, estimated with the global search.
/// The transmit beam is focused on the initial-access report.
pub fn estimate_once(cfg: &ScenarioConfig, seed: u64) -> Result<OnceOutput, Error> {
    let streams = SeedStream::new(seed);
    let (prior, _) = initial_access(cfg, seed)?;
    let prior = TargetState::from_vector(&prior)?;
    let states = cfg.trajectory.sample_cpi(&cfg.clock, 0)?;
    let w = focus_weights(&cfg.array, &prior.location);
    let probe = unit_probe(cfg.clock.snapshots(), &mut streams.substream(PROBE, 0));
    let beta = reflection_coefficient(&states[0].location, &cfg.budget, cfg.array.wavelength());
    let frame = noiseless_echo(&cfg.array, &cfg.clock, &states, &w, &probe, beta, cfg.budget.transmit_power)?
        .add_noise(cfg.budget.noise_power, &mut streams.substream(NOISE, 0))?;
    let report = acquire(
        &cfg.array,
        &cfg.clock,
        &frame,
        &AcquisitionGrid::default(),
        &cfg.tracker.window,
        &cfg.tracker.estimator,
    )?;
    Ok(OnceOutput { truth: states[0], report })
}
