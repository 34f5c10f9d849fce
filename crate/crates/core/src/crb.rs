//! Fisher information and Cramér–Rao bounds for (θ, r, v_r, v_θ) with the
//! complex reflection coefficient as a nuisance parameter.

use nalgebra::{DMatrix, Matrix4, Matrix6, Vector4};

use crate::array::ArrayConfig;
use crate::beamformer::focus_weights;
use crate::error::Result;
use crate::kinematics::{CpiClock, TargetState};
use crate::signature::{IntraCpiMotion, SignatureModel};
use crate::Complex;

/// Central-difference steps for (θ, r, v_r, v_θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps(pub [f64; 4]);

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps([1e-6, 1e-5, 1e-4, 1e-4])
    }
}

impl FdSteps {
    pub fn scaled(self, factor: f64) -> Self {
        FdSteps(self.0.map(|h| h * factor))
    }
}

/// FIM over (θ, r, v_r, v_θ, Re β, Im β).
#[derive(Debug, Clone, PartialEq)]
pub struct Fim {
    pub matrix: Matrix6<f64>,
    /// A one-sided difference was used because a central step left the
    /// valid region.
    pub one_sided: bool,
}

fn perturb(eta: &TargetState, i: usize, h: f64) -> Option<TargetState> {
    let mut v = eta.to_vector();
    v[i] += h;
    TargetState::from_vector(&v).ok()
}

/// FIM_ij = (2/σ²) Re{∂μᴴ/∂η_i ∂μ/∂η_j} for μ = β √P u(η).
pub fn fim(
    model: &SignatureModel,
    eta: &TargetState,
    reflection: Complex,
    transmit_power: f64,
    noise_power: f64,
    steps: FdSteps,
) -> Fim {
    let amp = reflection * transmit_power.sqrt();
    let base = model.signature(eta);
    let mut one_sided = false;
    let mut derivs: Vec<Vec<Complex>> = Vec::with_capacity(6);
    for (i, &h) in steps.0.iter().enumerate() {
        let d = match (perturb(eta, i, h), perturb(eta, i, -h)) {
            (Some(p), Some(m)) => {
                let (up, dn) = (model.signature(&p), model.signature(&m));
                up.iter().zip(&dn).map(|(a, b)| (a - b) * (amp / (2.0 * h))).collect()
            }
            (Some(p), None) => {
                one_sided = true;
                let up = model.signature(&p);
                up.iter().zip(&base).map(|(a, b)| (a - b) * (amp / h)).collect()
            }
            (None, Some(m)) => {
                one_sided = true;
                let dn = model.signature(&m);
                base.iter().zip(&dn).map(|(a, b)| (a - b) * (amp / h)).collect()
            }
            (None, None) => {
                one_sided = true;
                vec![Complex::new(0.0, 0.0); base.len()]
            }
        };
        derivs.push(d);
    }
    let sqrt_p = transmit_power.sqrt();
    derivs.push(base.iter().map(|u| u * sqrt_p).collect());
    derivs.push(base.iter().map(|u| u * Complex::new(0.0, sqrt_p)).collect());

    let scale = 2.0 / noise_power;
    let mut matrix = Matrix6::zeros();
    for i in 0..6 {
        for j in i..6 {
            let s: Complex = derivs[i].iter().zip(&derivs[j]).map(|(a, b)| a.conj() * b).sum();
            matrix[(i, j)] = scale * s.re;
            matrix[(j, i)] = scale * s.re;
        }
    }
    Fim { matrix, one_sided }
}

/// Bounds derived from a FIM.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbReport {
    pub fim: Matrix6<f64>,
    /// (θ, r, v_r, v_θ) block of the FIM inverse; the nuisance is marginalized.
    pub crb: Matrix4<f64>,
    /// Square roots of the CRB diagonal (rad, m, m/s, m/s).
    pub rcrb: Vector4<f64>,
    /// Condition number of the diagonally equilibrated FIM.
    pub condition_number: f64,
    /// The FIM was singular; affected bounds are infinite or regularized.
    pub singular: bool,
}

impl CrbReport {
    pub fn from_fim(fim: Matrix6<f64>) -> Self {
        let active: Vec<usize> = (0..6).filter(|&i| fim[(i, i)] > 0.0 && fim[(i, i)].is_finite()).collect();
        let mut singular = active.len() < 6 && (0..4).any(|i| !active.contains(&i));
        let mut crb = Matrix4::from_element(f64::NAN);
        for i in 0..4 {
            crb[(i, i)] = f64::INFINITY;
        }
        let mut condition_number = f64::INFINITY;

        if !active.is_empty() {
            let k = active.len();
            let d: Vec<f64> = active.iter().map(|&i| 1.0 / fim[(i, i)].sqrt()).collect();
            let mut fnorm = DMatrix::from_fn(k, k, |a, b| fim[(active[a], active[b])] * d[a] * d[b]);
            fnorm = (&fnorm + fnorm.transpose()) * 0.5;
            let eig = fnorm.clone().symmetric_eigen();
            let max = eig.eigenvalues.max();
            let min = eig.eigenvalues.min();
            condition_number = if min > 0.0 { max / min } else { f64::INFINITY };

            let inverse = match fnorm.clone().cholesky() {
                Some(ch) if condition_number < 1e15 => Some(ch.inverse()),
                _ => {
                    singular = true;
                    let reg = fnorm.trace() * 1e-12;
                    let regularized = &fnorm + DMatrix::identity(k, k) * reg;
                    regularized.cholesky().map(|ch| ch.inverse())
                }
            };
            if let Some(inv) = inverse {
                for (a, &ia) in active.iter().enumerate() {
                    for (b, &ib) in active.iter().enumerate() {
                        if ia < 4 && ib < 4 {
                            crb[(ia, ib)] = inv[(a, b)] * d[a] * d[b];
                        }
                    }
                }
            } else {
                singular = true;
            }
        }
        // Cross terms with unidentifiable parameters are undefined; report 0.
        for i in 0..4 {
            for j in 0..4 {
                if crb[(i, j)].is_nan() {
                    crb[(i, j)] = 0.0;
                }
            }
        }
        let rcrb = Vector4::from_fn(|i, _| crb[(i, i)].max(0.0).sqrt());
        Self { fim, crb, rcrb, condition_number, singular }
    }
}

/// FIM at `eta` followed by inversion.
pub fn crb_report(
    model: &SignatureModel,
    eta: &TargetState,
    reflection: Complex,
    transmit_power: f64,
    noise_power: f64,
    steps: FdSteps,
) -> CrbReport {
    CrbReport::from_fim(fim(model, eta, reflection, transmit_power, noise_power, steps).matrix)
}

/// Inputs shared by every point of a range sweep.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub array: ArrayConfig,
    pub clock: CpiClock,
    pub probe: Vec<Complex>,
    pub motion: IntraCpiMotion,
    pub reflection: Complex,
    pub transmit_power: f64,
    pub noise_power: f64,
    pub steps: FdSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub report: CrbReport,
}

/// Bounds versus range with the beam refocused at every evaluation point.
pub fn rcrb_sweep(setup: &SweepSetup, base: &TargetState, ranges: &[f64]) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    ranges
        .par_iter()
        .map(|&r| {
            let eta = TargetState::new(base.theta(), r, base.radial_velocity, base.transverse_velocity)?;
            let model = SignatureModel::new(
                setup.array,
                setup.clock,
                focus_weights(&setup.array, &eta.location),
                setup.probe.clone(),
                setup.motion,
            )?;
            let report = crb_report(
                &model,
                &eta,
                setup.reflection,
                setup.transmit_power,
                setup.noise_power,
                setup.steps,
            );
            Ok(SweepRow { r, report })
        })
        .collect()
}
