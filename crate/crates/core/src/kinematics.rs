//! Target mobility status, the polar kinematic model, and ground-truth paths.

use nalgebra::Vector4;

use crate::array::PolarLocation;
use crate::error::{Error, Result};

/// Full-dimensional mobility status at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub location: PolarLocation,
    /// Positive when moving away from the array center (m/s).
    pub radial_velocity: f64,
    /// Positive towards increasing angle (m/s).
    pub transverse_velocity: f64,
}

impl TargetState {
    pub fn new(theta: f64, r: f64, radial_velocity: f64, transverse_velocity: f64) -> Result<Self> {
        let location = PolarLocation::new(theta, r)?;
        if !(radial_velocity.is_finite() && transverse_velocity.is_finite()) {
            return Err(Error::invalid("velocity", "must be finite"));
        }
        Ok(Self { location, radial_velocity, transverse_velocity })
    }

    /// Stacked as (θ, r, v_r, v_θ).
    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.location.theta, self.location.r, self.radial_velocity, self.transverse_velocity)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn theta(&self) -> f64 {
        self.location.theta
    }

    pub fn r(&self) -> f64 {
        self.location.r
    }

    pub fn position(&self) -> [f64; 2] {
        self.location.to_cartesian()
    }

    /// v = v_r (cos θ, sin θ) + v_θ (-sin θ, cos θ).
    pub fn velocity_to_cartesian(&self) -> [f64; 2] {
        let (s, c) = self.location.theta.sin_cos();
        let vr = self.radial_velocity;
        let vt = self.transverse_velocity;
        [vr * c - vt * s, vr * s + vt * c]
    }

    /// Projects a Cartesian position and velocity onto the polar basis.
    pub fn from_cartesian(position: [f64; 2], velocity: [f64; 2]) -> Result<Self> {
        let location = PolarLocation::from_cartesian(position)?;
        let (s, c) = location.theta.sin_cos();
        Self::new(
            location.theta,
            location.r,
            velocity[0] * c + velocity[1] * s,
            -velocity[0] * s + velocity[1] * c,
        )
    }

    /// Exact constant-velocity Cartesian propagation by `dt` seconds.
    pub fn propagate_cartesian(&self, dt: f64) -> Result<Self> {
        let p = self.position();
        let v = self.velocity_to_cartesian();
        Self::from_cartesian([p[0] + v[0] * dt, p[1] + v[1] * dt], v)
    }

    /// One step of the polar kinematic model: velocities are held and the
    /// location advances by `dt`.
    pub fn kinematic_step(&self, dt: f64, mode: AngleUpdate) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let r = self.location.r;
        let r_next = r + self.radial_velocity * dt;
        let theta_next = self.location.theta + mode.angular_rate(self.transverse_velocity, r) * dt;
        Self::new(theta_next, r_next, self.radial_velocity, self.transverse_velocity)
    }
}

/// How the angle advances under the kinematic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleUpdate {
    /// θ' = θ + (v_θ / r) ΔT, with v_θ in m/s.
    #[default]
    Dimensional,
    /// θ' = θ + v_θ ΔT, treating v_θ as an angular rate.
    Unscaled,
}

impl AngleUpdate {
    pub fn angular_rate(self, transverse_velocity: f64, r: f64) -> f64 {
        match self {
            AngleUpdate::Dimensional => transverse_velocity / r,
            AngleUpdate::Unscaled => transverse_velocity,
        }
    }
}

/// CPI timing: ΔT split into M snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpiClock {
    cpi_duration: f64,
    snapshots: usize,
}

impl CpiClock {
    pub fn new(cpi_duration: f64, snapshots: usize) -> Result<Self> {
        if !(cpi_duration > 0.0 && cpi_duration.is_finite()) {
            return Err(Error::invalid("cpi_duration", "must be positive"));
        }
        if snapshots < 2 {
            return Err(Error::invalid("snapshots", "need at least 2 per CPI"));
        }
        Ok(Self { cpi_duration, snapshots })
    }

    pub fn cpi_duration(&self) -> f64 {
        self.cpi_duration
    }

    pub fn snapshots(&self) -> usize {
        self.snapshots
    }

    pub fn snapshot_period(&self) -> f64 {
        self.cpi_duration / self.snapshots as f64
    }
}

/// Parametric ground-truth path in Cartesian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryKind {
    /// Circle of `radius` about `center`, phase φ0 + ωt.
    CircularArc {
        center: [f64; 2],
        radius: f64,
        angular_rate: f64,
        start_phase: f64,
    },
    StraightLine {
        start: [f64; 2],
        velocity: [f64; 2],
    },
    /// Radius ρ0 + ρ̇t about `center`, phase φ0 + ωt.
    Spiral {
        center: [f64; 2],
        start_radius: f64,
        radial_rate: f64,
        angular_rate: f64,
        start_phase: f64,
    },
    /// Polyline traversed at constant speed; the target rests at the last
    /// waypoint afterwards.
    WaypointSequence {
        waypoints: Vec<[f64; 2]>,
        speed: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    /// Seconds.
    pub duration: f64,
}

impl Trajectory {
    pub fn new(kind: TrajectoryKind, duration: f64) -> Result<Self> {
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::invalid("duration", "must be non-negative"));
        }
        match &kind {
            TrajectoryKind::CircularArc { radius, .. } if !(*radius > 0.0) => {
                return Err(Error::invalid("radius", "must be positive"))
            }
            TrajectoryKind::Spiral { start_radius, .. } if !(*start_radius > 0.0) => {
                return Err(Error::invalid("start_radius", "must be positive"))
            }
            TrajectoryKind::WaypointSequence { waypoints, speed } => {
                if waypoints.is_empty() {
                    return Err(Error::invalid("waypoints", "need at least one waypoint"));
                }
                if waypoints.len() > 1 && !(*speed > 0.0) {
                    return Err(Error::invalid("speed", "must be positive"));
                }
            }
            _ => {}
        }
        Ok(Self { kind, duration })
    }

    /// Cartesian position and velocity at time `t`.
    pub fn cartesian_at(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        match &self.kind {
            TrajectoryKind::CircularArc { center, radius, angular_rate, start_phase } => {
                let (s, c) = (start_phase + angular_rate * t).sin_cos();
                (
                    [center[0] + radius * c, center[1] + radius * s],
                    [-radius * angular_rate * s, radius * angular_rate * c],
                )
            }
            TrajectoryKind::StraightLine { start, velocity } => {
                ([start[0] + velocity[0] * t, start[1] + velocity[1] * t], *velocity)
            }
            TrajectoryKind::Spiral { center, start_radius, radial_rate, angular_rate, start_phase } => {
                let rho = start_radius + radial_rate * t;
                let (s, c) = (start_phase + angular_rate * t).sin_cos();
                (
                    [center[0] + rho * c, center[1] + rho * s],
                    [radial_rate * c - rho * angular_rate * s, radial_rate * s + rho * angular_rate * c],
                )
            }
            TrajectoryKind::WaypointSequence { waypoints, speed } => waypoint_state(waypoints, *speed, t),
        }
    }

    /// Polar state at time `t`; fails if the path has left the valid region.
    pub fn state_at(&self, t: f64) -> Result<TargetState> {
        if let TrajectoryKind::Spiral { start_radius, radial_rate, .. } = &self.kind {
            if start_radius + radial_rate * t <= 0.0 {
                return Err(Error::invalid("trajectory", "spiral radius collapsed"));
            }
        }
        let (p, v) = self.cartesian_at(t);
        TargetState::from_cartesian(p, v)
    }

    /// Samples the path at every snapshot instant m·T_s covering `duration`.
    pub fn sample(&self, clock: &CpiClock) -> Result<Vec<TargetState>> {
        let ts = clock.snapshot_period();
        let count = (self.duration / ts).round() as usize;
        (0..count).map(|m| self.state_at(m as f64 * ts)).collect()
    }

    /// States at the snapshot instants of CPI `cpi` (M entries).
    pub fn sample_cpi(&self, clock: &CpiClock, cpi: usize) -> Result<Vec<TargetState>> {
        let t0 = cpi as f64 * clock.cpi_duration();
        let ts = clock.snapshot_period();
        (0..clock.snapshots()).map(|m| self.state_at(t0 + m as f64 * ts)).collect()
    }
}

fn waypoint_state(waypoints: &[[f64; 2]], speed: f64, t: f64) -> ([f64; 2], [f64; 2]) {
    let mut remaining = t.max(0.0) * speed;
    for w in waypoints.windows(2) {
        let dx = w[1][0] - w[0][0];
        let dy = w[1][1] - w[0][1];
        let len = dx.hypot(dy);
        if len == 0.0 {
            continue;
        }
        if remaining < len {
            let f = remaining / len;
            return ([w[0][0] + f * dx, w[0][1] + f * dy], [speed * dx / len, speed * dy / len]);
        }
        remaining -= len;
    }
    (*waypoints.last().unwrap(), [0.0, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn velocity_basis_expansion() {
        let s = TargetState::new(PI / 2.0, 10.0, 3.0, 2.0).unwrap();
        let v = s.velocity_to_cartesian();
        assert!((v[0] + 2.0).abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);

        let s = TargetState::new(PI / 2.0, 10.0, 0.0, 0.0).unwrap();
        assert_eq!(s.velocity_to_cartesian(), [0.0, 0.0]);

        // θ = 0 lies outside the target region, so evaluate the formula on a
        // state nudged off the axis.
        let s = TargetState::new(1e-12, 10.0, 1.0, 0.0).unwrap();
        let v = s.velocity_to_cartesian();
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-11);
    }

    #[test]
    fn kinematic_step_example() {
        let s = TargetState::new(PI / 2.0, 10.0, 3.0, 2.0).unwrap();
        let n = s.kinematic_step(0.01, AngleUpdate::Dimensional).unwrap();
        assert_relative_eq!(n.r(), 10.03, max_relative = 1e-14);
        assert_relative_eq!(n.theta(), PI / 2.0 + 0.002, max_relative = 1e-14);
        assert_eq!(n.radial_velocity, 3.0);
        assert_eq!(n.transverse_velocity, 2.0);

        let lit = s.kinematic_step(0.01, AngleUpdate::Unscaled).unwrap();
        assert_relative_eq!(lit.theta(), PI / 2.0 + 0.02, max_relative = 1e-14);
    }

    #[test]
    fn stationary_is_fixed_point() {
        let s = TargetState::new(1.0, 12.0, 0.0, 0.0).unwrap();
        assert_eq!(s.kinematic_step(0.01, AngleUpdate::Dimensional).unwrap(), s);
    }

    #[test]
    fn kinematic_step_rejects_invalid() {
        let s = TargetState::new(PI / 2.0, 0.01, -3.0, 0.0).unwrap();
        assert!(s.kinematic_step(0.01, AngleUpdate::Dimensional).is_err());
        let s = TargetState::new(3.14, 1.0, 0.0, 5.0).unwrap();
        assert!(s.kinematic_step(0.01, AngleUpdate::Dimensional).is_err());
        assert!(s.kinematic_step(0.0, AngleUpdate::Dimensional).is_err());
    }

    #[test]
    fn kinematic_step_is_second_order_accurate() {
        // Exact constant-velocity propagation gives θ = π/2 + atan(0.02/10.03),
        // so the single-step angle error is ≈ v_r v_θ ΔT² / r² ≈ 6.0e-6 rad.
        let s = TargetState::new(PI / 2.0, 10.0, 3.0, 2.0).unwrap();
        let err = |dt: f64| {
            let model = s.kinematic_step(dt, AngleUpdate::Dimensional).unwrap();
            let exact = s.propagate_cartesian(dt).unwrap();
            (model.theta() - exact.theta()).abs()
        };
        let e1 = err(0.01);
        assert!((e1 - 5.99e-6).abs() < 0.05e-6, "e1 = {e1}");
        let ratio = e1 / err(0.005);
        assert!((ratio - 4.0).abs() < 0.1, "ratio = {ratio}");

        // Two half steps agree with one full step to O(ΔT²).
        let half = s
            .kinematic_step(0.005, AngleUpdate::Dimensional)
            .unwrap()
            .kinematic_step(0.005, AngleUpdate::Dimensional)
            .unwrap();
        let full = s.kinematic_step(0.01, AngleUpdate::Dimensional).unwrap();
        let gap = (half.theta() - full.theta()).abs();
        assert!((gap - 1.5e-6).abs() < 0.01e-6, "gap = {gap}");
    }

    #[test]
    fn straight_line_projection() {
        let traj =
            Trajectory::new(TrajectoryKind::StraightLine { start: [0.0, 20.0], velocity: [5.0, 0.0] }, 1.0)
                .unwrap();
        let s = traj.state_at(0.0).unwrap();
        assert_relative_eq!(s.theta(), PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(s.r(), 20.0, max_relative = 1e-15);
        assert!(s.radial_velocity.abs() < 1e-14);
        assert_relative_eq!(s.transverse_velocity, -5.0, max_relative = 1e-14);
    }

    #[test]
    fn arc_about_origin_has_no_radial_motion() {
        let omega = 0.3;
        let traj = Trajectory::new(
            TrajectoryKind::CircularArc {
                center: [0.0, 0.0],
                radius: 15.0,
                angular_rate: omega,
                start_phase: 1.0,
            },
            2.0,
        )
        .unwrap();
        let clock = CpiClock::new(0.01, 64).unwrap();
        let states = traj.sample(&clock).unwrap();
        assert_eq!(states.len(), 12800);
        for s in states {
            assert!(s.radial_velocity.abs() < 1e-12);
            assert_relative_eq!(s.transverse_velocity, 15.0 * omega, max_relative = 1e-12);
            assert_relative_eq!(s.r(), 15.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn stationary_waypoint() {
        let traj = Trajectory::new(
            TrajectoryKind::WaypointSequence { waypoints: vec![[1.0, 9.0]], speed: 0.0 },
            0.1,
        )
        .unwrap();
        let clock = CpiClock::new(0.01, 8).unwrap();
        let states = traj.sample(&clock).unwrap();
        assert_eq!(states.len(), 80);
        assert!(states.iter().all(|s| *s == states[0]));
        assert_eq!(states[0].radial_velocity, 0.0);
    }

    #[test]
    fn waypoint_polyline() {
        let traj = Trajectory::new(
            TrajectoryKind::WaypointSequence {
                waypoints: vec![[-1.0, 10.0], [1.0, 10.0], [1.0, 12.0]],
                speed: 2.0,
            },
            3.0,
        )
        .unwrap();
        let (p, v) = traj.cartesian_at(0.5);
        assert_relative_eq!(p[0], 0.0, epsilon = 1e-12);
        assert_eq!(v, [2.0, 0.0]);
        let (p, v) = traj.cartesian_at(1.5);
        assert_relative_eq!(p[1], 11.0, epsilon = 1e-12);
        assert_relative_eq!(v[1], 2.0, epsilon = 1e-12);
        let (p, v) = traj.cartesian_at(2.5);
        assert_eq!(p, [1.0, 12.0]);
        assert_eq!(v, [0.0, 0.0]);
    }

    #[test]
    fn trajectory_leaving_region_is_rejected() {
        let traj =
            Trajectory::new(TrajectoryKind::StraightLine { start: [0.0, 1.0], velocity: [0.0, -10.0] }, 1.0)
                .unwrap();
        let clock = CpiClock::new(0.01, 4).unwrap();
        assert!(traj.sample(&clock).is_err());

        let spiral = Trajectory::new(
            TrajectoryKind::Spiral {
                center: [0.0, 0.0],
                start_radius: 1.0,
                radial_rate: -2.0,
                angular_rate: 0.1,
                start_phase: 1.5,
            },
            1.0,
        )
        .unwrap();
        assert!(spiral.sample(&clock).is_err());
    }

    #[test]
    fn polar_velocities_match_numerical_derivatives() {
        let traj = Trajectory::new(
            TrajectoryKind::Spiral {
                center: [2.0, 5.0],
                start_radius: 12.0,
                radial_rate: 1.5,
                angular_rate: 0.4,
                start_phase: 0.7,
            },
            2.0,
        )
        .unwrap();
        let clock = CpiClock::new(0.01, 64).unwrap();
        let ts = clock.snapshot_period();
        let states = traj.sample(&clock).unwrap();
        for w in states.windows(3).step_by(97) {
            let dr = (w[2].r() - w[0].r()) / (2.0 * ts);
            let dth = (w[2].theta() - w[0].theta()) / (2.0 * ts);
            assert!((dr - w[1].radial_velocity).abs() < 1e-4);
            assert!((dth * w[1].r() - w[1].transverse_velocity).abs() < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn polar_cartesian_state_round_trip(
            theta in 0.01f64..3.13, r in 0.1f64..1e4, vr in -20.0f64..20.0, vt in -20.0f64..20.0,
        ) {
            let s = TargetState::new(theta, r, vr, vt).unwrap();
            let back = TargetState::from_cartesian(s.position(), s.velocity_to_cartesian()).unwrap();
            prop_assert!(((back.r() - r) / r).abs() < 1e-10);
            prop_assert!(((back.theta() - theta) / theta).abs() < 1e-10);
            let scale = vr.abs().max(vt.abs()).max(1e-3);
            prop_assert!((back.radial_velocity - vr).abs() / scale < 1e-10);
            prop_assert!((back.transverse_velocity - vt).abs() / scale < 1e-10);
        }

        #[test]
        fn step_error_shrinks_quadratically(
            theta in 0.5f64..2.6, r in 5.0f64..50.0, vr in -5.0f64..5.0, vt in 1.0f64..5.0,
        ) {
            let s = TargetState::new(theta, r, vr, vt).unwrap();
            let err = |dt: f64| {
                let m = s.kinematic_step(dt, AngleUpdate::Dimensional).unwrap();
                let e = s.propagate_cartesian(dt).unwrap();
                (m.theta() - e.theta()).abs() + (m.r() - e.r()).abs() / r
            };
            let ratio = err(0.02) / err(0.01);
            prop_assert!(ratio > 3.5 && ratio < 4.5, "ratio {}", ratio);
        }
    }
}
