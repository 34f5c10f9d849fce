use nalgebra::{Matrix4, Vector4};
use nfpb_core::beamformer::{comm_metrics, BeamPlan};
use nfpb_core::echo::{noiseless_echo, unit_probe};
use nfpb_core::estimator::grid_then_refine;
use nfpb_core::rng::{SeedStream, NOISE, PROBE};
use nfpb_core::{
    ArrayConfig, Complex, CpiClock, LinkBudget, PathLossMode, SearchWindow, Tracker, TrackerConfig,
    Trajectory, TrajectoryKind,
};

fn setup() -> (ArrayConfig, CpiClock, Trajectory) {
    let traj =
        Trajectory::new(TrajectoryKind::StraightLine { start: [-2.0, 12.0], velocity: [3.0, -1.0] }, 1.0)
            .unwrap();
    (ArrayConfig::new(128, 30e9).unwrap(), CpiClock::new(0.01, 64).unwrap(), traj)
}

#[test]
fn window_search_recovers_noisy_truth() {
    let (array, clock, traj) = setup();
    let states = traj.sample_cpi(&clock, 0).unwrap();
    let truth = states[0];
    let streams = SeedStream::new(3);
    let plan = BeamPlan::new(&array, &clock, truth, false);
    let probe = unit_probe(64, &mut streams.substream(PROBE, 0));
    let frame =
        noiseless_echo(&array, &clock, &states, &plan.base_weights, &probe, Complex::new(1e-3, 0.0), 1.0)
            .unwrap()
            .add_noise(1e-9, &mut streams.substream(NOISE, 0))
            .unwrap();
    let window = SearchWindow::new(truth, [0.01, 0.5, 1.0, 1.0], [11, 9, 9, 9]).unwrap();
    let opts = nfpb_core::EstimatorOptions { transmit_power: 1.0, ..Default::default() };
    let rep = grid_then_refine(&array, &clock, &frame, &window, &opts).unwrap();
    assert!(!rep.low_confidence);
    let err = rep.estimate.to_vector() - truth.to_vector();
    for i in 0..4 {
        assert!(err[i].abs() < 5.0 * rep.rcrb[i], "param {i}: error {} rcrb {}", err[i], rep.rcrb[i]);
    }
    assert!((rep.reflection.norm() - 1e-3).abs() < 1e-4);
}

#[test]
fn closed_loop_follows_a_line() {
    let (array, clock, traj) = setup();
    let budget = LinkBudget::from_dbm(30.0, -60.0, PathLossMode::UnitReflection).unwrap();
    let streams = SeedStream::new(9);
    let truth0 = traj.state_at(0.0).unwrap().to_vector();
    let start = truth0 + Vector4::new(0.002, 0.2, 0.3, -0.3);
    let cov = Matrix4::from_diagonal(&Vector4::new(1e-5, 0.25, 1.0, 1.0));
    let mut config = TrackerConfig::default();
    config.estimator.transmit_power = budget.transmit_power;
    let mut tracker = Tracker::new(array, clock, config, start, cov).unwrap();
    let mut last_error = f64::INFINITY;
    for k in 0..40 {
        let prior = tracker.prior().unwrap();
        let plan = BeamPlan::new(&array, &clock, prior, true);
        let states = traj.sample_cpi(&clock, k).unwrap();
        let probe = unit_probe(64, &mut streams.substream(PROBE, k as u64));
        let frame = noiseless_echo(
            &array,
            &clock,
            &states,
            &plan.base_weights,
            &probe,
            Complex::new(1e-3, 0.0),
            budget.transmit_power,
        )
        .unwrap()
        .add_noise(budget.noise_power, &mut streams.substream(NOISE, k as u64))
        .unwrap();
        let step = tracker.step(&frame).unwrap();
        assert!(!step.gated_out, "CPI {k}");
        let p = step.posterior_mean;
        let t = states[0].to_vector();
        let xy = |v: &Vector4<f64>| [v[1] * v[0].cos(), v[1] * v[0].sin()];
        let (a, b) = (xy(&p), xy(&t));
        last_error = (a[0] - b[0]).hypot(a[1] - b[1]);
        let m = comm_metrics(&array, &states, &plan, &budget);
        if k >= 5 {
            assert!(m.gain_loss_db < 0.5, "CPI {k}: {}", m.gain_loss_db);
        }
    }
    assert!(!tracker.is_lost());
    assert!(last_error < 0.1, "{last_error}");
}

#[test]
fn silent_frames_lose_the_track() {
    let (array, clock, traj) = setup();
    let truth = traj.state_at(0.0).unwrap();
    let mut config = TrackerConfig::default();
    config.estimator.transmit_power = 1.0;
    let cov = Matrix4::from_diagonal(&Vector4::new(1e-5, 0.25, 1.0, 1.0));
    let mut tracker = Tracker::new(array, clock, config, truth.to_vector(), cov).unwrap();
    let streams = SeedStream::new(1);
    let probe = unit_probe(64, &mut streams.substream(PROBE, 0));
    let states = vec![truth; 64];
    let w = BeamPlan::new(&array, &clock, truth, false).base_weights;
    let mut steps = 0;
    while !tracker.is_lost() {
        let frame = noiseless_echo(&array, &clock, &states, &w, &probe, Complex::new(0.0, 0.0), 1.0)
            .unwrap()
            .add_noise(1e-6, &mut streams.substream(NOISE, steps))
            .unwrap();
        assert!(tracker.step(&frame).unwrap().gated_out);
        steps += 1;
        assert!(steps <= 6);
    }
    assert_eq!(steps, 6);
    let frame = noiseless_echo(&array, &clock, &states, &w, &probe, Complex::new(0.0, 0.0), 1.0).unwrap();
    assert!(tracker.step(&frame).is_err());
}
