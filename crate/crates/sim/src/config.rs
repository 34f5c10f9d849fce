//! Scenario configuration: flat `section.key = value` text with `#` comments.
//!
//! Every key is declared in [`SCHEMA`]; unknown keys, duplicates, malformed
//! values and keys that do not apply to the selected trajectory kind are
//! rejected with an error naming the key.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Matrix4;
use nfpb_core::estimator::{EstimatorOptions, WindowPolicy};
use nfpb_core::tracker::{MeasurementNoise, NoiseModel, TrackerConfig};
use nfpb_core::{
    AngleUpdate, ArrayConfig, CpiClock, IntraCpiMotion, LinkBudget, PathLossMode, Trajectory, TrajectoryKind,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Float,
    Count,
    Seed,
    Choice(&'static [&'static str]),
    /// Whitespace-separated floats.
    FloatList,
    /// `x y; x y; ...`
    PointList,
    /// `auto` or four odd counts.
    GridCounts,
}

pub struct KeySpec {
    pub key: &'static str,
    pub kind: ValueKind,
    pub required: bool,
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

const fn key(
    key: &'static str,
    kind: ValueKind,
    default: Option<&'static str>,
    doc: &'static str,
) -> KeySpec {
    KeySpec { key, kind, required: default.is_none(), default, doc }
}

const TRAJECTORY_KINDS: &[&str] = &["arc", "line", "spiral", "waypoints"];

pub const SCHEMA: &[KeySpec] = &[
    key("array.N", ValueKind::Count, None, "number of antennas"),
    key("array.carrier_frequency_hz", ValueKind::Float, None, "carrier frequency"),
    key("array.spacing_over_halflambda", ValueKind::Float, Some("1"), "element spacing in half wavelengths"),
    key("clock.cpi_s", ValueKind::Float, None, "CPI duration"),
    key("clock.snapshots", ValueKind::Count, Some("64"), "snapshots per CPI"),
    key("budget.tx_power_dbm", ValueKind::Float, None, "transmit power"),
    key("budget.noise_power_dbm", ValueKind::Float, None, "receiver noise power"),
    key("budget.path_loss_mode", ValueKind::Choice(&["unit", "radar"]), Some("unit"), "reflection model"),
    key(
        "intra_cpi_motion",
        ValueKind::Choice(&["continuous", "frozen"]),
        Some("continuous"),
        "estimator motion model within a CPI",
    ),
    key(
        "kinematics.angle_update",
        ValueKind::Choice(&["dimensional", "unscaled"]),
        Some("dimensional"),
        "angle update of the kinematic model",
    ),
    key("trajectory.kind", ValueKind::Choice(TRAJECTORY_KINDS), Some("arc"), "ground-truth path"),
    key("trajectory.center_x_m", ValueKind::Float, Some("0"), "arc/spiral center x"),
    key("trajectory.center_y_m", ValueKind::Float, Some("0"), "arc/spiral center y"),
    key("trajectory.radius_m", ValueKind::Float, Some("15"), "arc radius"),
    key("trajectory.angular_rate_rad_s", ValueKind::Float, Some("0.2"), "arc/spiral angular rate"),
    key("trajectory.start_phase_rad", ValueKind::Float, Some("1.5707963267948966"), "arc/spiral start phase"),
    key("trajectory.start_radius_m", ValueKind::Float, Some("15"), "spiral start radius"),
    key("trajectory.radial_rate_mps", ValueKind::Float, Some("-1"), "spiral radius rate"),
    key("trajectory.start_x_m", ValueKind::Float, Some("0"), "line start x"),
    key("trajectory.start_y_m", ValueKind::Float, Some("15"), "line start y"),
    key("trajectory.velocity_x_mps", ValueKind::Float, Some("2"), "line velocity x"),
    key("trajectory.velocity_y_mps", ValueKind::Float, Some("0"), "line velocity y"),
    key("trajectory.waypoints", ValueKind::PointList, Some("0 15; 3 15"), "waypoint polyline"),
    key("trajectory.speed_mps", ValueKind::Float, Some("2"), "waypoint speed"),
    key(
        "estimator.grid_counts",
        ValueKind::GridCounts,
        Some("auto"),
        "local grid counts (θ r v_r v_θ) or auto",
    ),
    key(
        "estimator.sigma_multiplier",
        ValueKind::Float,
        Some("3"),
        "window half-width in predicted standard deviations",
    ),
    key("estimator.floor_theta_deg", ValueKind::Float, Some("0.2"), "minimum θ half-width"),
    key("estimator.floor_r_m", ValueKind::Float, Some("0.5"), "minimum r half-width"),
    key("estimator.floor_vr_mps", ValueKind::Float, Some("1"), "minimum v_r half-width"),
    key("estimator.floor_vtheta_mps", ValueKind::Float, Some("1"), "minimum v_θ half-width"),
    key(
        "estimator.resolution_fraction",
        ValueKind::Float,
        Some("0.5"),
        "grid step as a fraction of the resolution cell",
    ),
    key("estimator.max_counts", ValueKind::GridCounts, Some("41 15 41 15"), "cap on automatic grid counts"),
    key("estimator.tolerance", ValueKind::Float, Some("1e-8"), "relative simplex tolerance"),
    key(
        "estimator.noise_tolerance",
        ValueKind::Float,
        Some("1e-3"),
        "simplex tolerance in noise-power units",
    ),
    key("estimator.max_iterations", ValueKind::Count, Some("500"), "simplex iteration cap"),
    key(
        "estimator.false_alarm",
        ValueKind::Float,
        Some("1e-3"),
        "false-alarm probability of the confidence flag",
    ),
    key("tracker.q_a", ValueKind::Float, Some("5"), "unmodeled acceleration intensity"),
    key(
        "tracker.r_mode",
        ValueKind::Choice(&["crb-plug-in", "fixed"]),
        Some("crb-plug-in"),
        "measurement noise source",
    ),
    key("tracker.r_fixed_diag", ValueKind::FloatList, Some("1e-8 1e-4 1e-4 1e-2"), "fixed R diagonal"),
    key("tracker.init_noise_theta_deg", ValueKind::Float, Some("0.5"), "initial-access θ error std"),
    key("tracker.init_noise_r_m", ValueKind::Float, Some("0.5"), "initial-access r error std"),
    key("tracker.init_noise_vr_mps", ValueKind::Float, Some("0.5"), "initial-access v_r error std"),
    key("tracker.init_noise_vtheta_mps", ValueKind::Float, Some("0.5"), "initial-access v_θ error std"),
    key(
        "tracker.gate",
        ValueKind::Float,
        Some("18.466826952903151"),
        "gating threshold on squared Mahalanobis distance",
    ),
    key(
        "tracker.max_coasts",
        ValueKind::Count,
        Some("5"),
        "consecutive gated-out CPIs before the track is lost",
    ),
    key("run.num_cpis", ValueKind::Count, Some("200"), "CPIs per track run"),
    key("run.seed", ValueKind::Seed, Some("0"), "master seed"),
    key("sweep.theta_rad", ValueKind::Float, Some("1.5707963267948966"), "sweep angle"),
    key("sweep.vr_mps", ValueKind::Float, Some("3"), "sweep radial velocity"),
    key("sweep.vtheta_mps", ValueKind::Float, Some("2"), "sweep transverse velocity"),
    key("sweep.r_min_rayleigh", ValueKind::Float, Some("0.02"), "closest range over d_R"),
    key("sweep.r_max_rayleigh", ValueKind::Float, Some("3"), "farthest range over d_R"),
    key("sweep.points", ValueKind::Count, Some("12"), "log-spaced ranges"),
    key("mc.trials", ValueKind::Count, Some("100"), "Monte Carlo trials per SNR point"),
    key("mc.snr_db", ValueKind::FloatList, Some("20 30"), "post-beamforming SNR points"),
    key("mc.theta_rad", ValueKind::Float, Some("1.5707963267948966"), "true angle"),
    key("mc.r_m", ValueKind::Float, Some("20"), "true range"),
    key("mc.vr_mps", ValueKind::Float, Some("3"), "true radial velocity"),
    key("mc.vtheta_mps", ValueKind::Float, Some("2"), "true transverse velocity"),
];

fn trajectory_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "arc" => &[
            "trajectory.center_x_m",
            "trajectory.center_y_m",
            "trajectory.radius_m",
            "trajectory.angular_rate_rad_s",
            "trajectory.start_phase_rad",
        ],
        "line" => &[
            "trajectory.start_x_m",
            "trajectory.start_y_m",
            "trajectory.velocity_x_mps",
            "trajectory.velocity_y_mps",
        ],
        "spiral" => &[
            "trajectory.center_x_m",
            "trajectory.center_y_m",
            "trajectory.start_radius_m",
            "trajectory.radial_rate_mps",
            "trajectory.angular_rate_rad_s",
            "trajectory.start_phase_rad",
        ],
        _ => &["trajectory.waypoints", "trajectory.speed_mps"],
    }
}

/// Shipped presets, selectable by name in place of a path.
pub const PRESETS: &[(&str, &str)] = &[
    ("case_study", include_str!("../configs/case_study.cfg")),
    ("fig1", include_str!("../configs/fig1.cfg")),
    ("mc_rmse", include_str!("../configs/mc_rmse.cfg")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Raw key/value pairs in file order, checked against the schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::new(format!("line {}", lineno + 1), "expected `key = value`"));
            };
            let (k, v) = (k.trim(), v.trim());
            let Some(spec) = SCHEMA.iter().find(|s| s.key == k) else {
                return Err(ConfigError::new(k, "unknown key"));
            };
            if v.is_empty() {
                return Err(ConfigError::new(k, "empty value"));
            }
            check_value(spec, v)?;
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::new(k, "duplicate key"));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let spec =
            SCHEMA.iter().find(|s| s.key == key).ok_or_else(|| ConfigError::new(key, "unknown key"))?;
        check_value(spec, value)?;
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Explicitly set keys, sorted.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Canonical `key = value` text of the effective config, so a default
    /// written out explicitly hashes the same as one left implicit.
    pub fn canonical(&self) -> String {
        self.effective().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Every key that applies to this config with its explicit or default
    /// value, sorted. Trajectory keys of other kinds are left out.
    pub fn effective(&self) -> BTreeMap<&'static str, String> {
        let kind = self.get("trajectory.kind").unwrap_or("arc");
        let own = trajectory_keys(kind);
        SCHEMA
            .iter()
            .filter(|s| {
                !s.key.starts_with("trajectory.") || s.key == "trajectory.kind" || own.contains(&s.key)
            })
            .filter_map(|s| self.get(s.key).or(s.default).map(|v| (s.key, v.to_string())))
            .collect()
    }

    fn value(&self, key: &str) -> Result<&str> {
        let spec = SCHEMA.iter().find(|s| s.key == key).expect("key missing from schema");
        match (self.get(key), spec.default) {
            (Some(v), _) => Ok(v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ConfigError::new(key, "required key is missing")),
        }
    }

    fn float(&self, key: &str) -> Result<f64> {
        parse_float(key, self.value(key)?)
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.float(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::new(key, "must be positive"))
        }
    }

    fn non_negative(&self, key: &str) -> Result<f64> {
        let v = self.float(key)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::new(key, "must be non-negative"))
        }
    }

    fn count(&self, key: &str) -> Result<usize> {
        self.value(key)?.parse().map_err(|_| ConfigError::new(key, "expected a non-negative integer"))
    }

    fn floats(&self, key: &str) -> Result<Vec<f64>> {
        self.value(key)?.split_whitespace().map(|t| parse_float(key, t)).collect()
    }
}

fn parse_float(key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(ConfigError::new(key, format!("expected a finite number, got `{v}`"))),
    }
}

fn parse_points(key: &str, v: &str) -> Result<Vec<[f64; 2]>> {
    v.split(';')
        .map(|p| {
            let xy: Vec<f64> = p.split_whitespace().map(|t| parse_float(key, t)).collect::<Result<_>>()?;
            match xy[..] {
                [x, y] => Ok([x, y]),
                _ => Err(ConfigError::new(key, "each waypoint needs exactly two coordinates")),
            }
        })
        .collect()
}

fn parse_counts(key: &str, v: &str) -> Result<Option<[usize; 4]>> {
    if v == "auto" {
        return Ok(None);
    }
    let c: Vec<usize> = v
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| ConfigError::new(key, "expected `auto` or four odd integers")))
        .collect::<Result<_>>()?;
    match c[..] {
        [a, b, d, e] if c.iter().all(|n| n % 2 == 1 && *n >= 3) => Ok(Some([a, b, d, e])),
        _ => Err(ConfigError::new(key, "expected `auto` or four odd integers ≥ 3")),
    }
}

fn check_value(spec: &KeySpec, v: &str) -> Result<()> {
    let k = spec.key;
    match spec.kind {
        ValueKind::Float => parse_float(k, v).map(|_| ()),
        ValueKind::Count => {
            v.parse::<usize>().map(|_| ()).map_err(|_| ConfigError::new(k, "expected a non-negative integer"))
        }
        ValueKind::Seed => v
            .parse::<u64>()
            .map(|_| ())
            .map_err(|_| ConfigError::new(k, "expected an unsigned 64-bit integer")),
        ValueKind::Choice(options) => {
            if options.contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::new(k, format!("expected one of {}", options.join(", "))))
            }
        }
        ValueKind::FloatList => v.split_whitespace().try_for_each(|t| parse_float(k, t).map(|_| ())),
        ValueKind::PointList => parse_points(k, v).map(|_| ()),
        ValueKind::GridCounts => parse_counts(k, v).map(|_| ()),
    }
}

/// Range sweep at a fixed angle and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub theta: f64,
    pub radial_velocity: f64,
    pub transverse_velocity: f64,
    pub ranges: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub trials: usize,
    pub snr_db: Vec<f64>,
    pub theta: f64,
    pub r: f64,
    pub radial_velocity: f64,
    pub transverse_velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialAccess {
    /// Standard deviations of the perturbation of the true state.
    pub noise: [f64; 4],
}

/// Fully typed and validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub raw: RawConfig,
    pub array: ArrayConfig,
    pub clock: CpiClock,
    pub budget: LinkBudget,
    pub motion: IntraCpiMotion,
    pub trajectory: Trajectory,
    pub tracker: TrackerConfig,
    pub fixed_grid: Option<[usize; 4]>,
    pub initial_access: InitialAccess,
    pub num_cpis: usize,
    pub seed: u64,
    pub sweep: SweepConfig,
    pub mc: McConfig,
}

impl ScenarioConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    /// A preset name or a path to a config file.
    pub fn load(source: &str) -> Result<Self> {
        let path = Path::new(source);
        if path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("--config", format!("cannot read {source}: {e}")))?;
            return Self::from_text(&text);
        }
        match preset(source) {
            Some(text) => Self::from_text(text),
            None => Err(ConfigError::new("--config", format!("`{source}` is neither a file nor a preset"))),
        }
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let n = raw.count("array.N")?;
        if n < 2 {
            return Err(ConfigError::new("array.N", "need at least 2 antennas"));
        }
        let fc = raw.positive("array.carrier_frequency_hz")?;
        let spacing = raw.positive("array.spacing_over_halflambda")?;
        let half_lambda = nfpb_core::SPEED_OF_LIGHT / fc / 2.0;
        let array = ArrayConfig::with_spacing(n, fc, spacing * half_lambda)
            .map_err(|e| ConfigError::new("array.N", e.to_string()))?;

        let cpi = raw.positive("clock.cpi_s")?;
        let snapshots = raw.count("clock.snapshots")?;
        let clock =
            CpiClock::new(cpi, snapshots).map_err(|e| ConfigError::new("clock.snapshots", e.to_string()))?;

        let mode = match raw.value("budget.path_loss_mode")? {
            "radar" => PathLossMode::RadarEquation,
            _ => PathLossMode::UnitReflection,
        };
        let budget = LinkBudget::from_dbm(
            raw.float("budget.tx_power_dbm")?,
            raw.float("budget.noise_power_dbm")?,
            mode,
        )
        .map_err(|e| ConfigError::new("budget.tx_power_dbm", e.to_string()))?;

        let motion = match raw.value("intra_cpi_motion")? {
            "frozen" => IntraCpiMotion::Frozen,
            _ => IntraCpiMotion::Continuous,
        };
        let angle_update = match raw.value("kinematics.angle_update")? {
            "unscaled" => AngleUpdate::Unscaled,
            _ => AngleUpdate::Dimensional,
        };

        let num_cpis = raw.count("run.num_cpis")?;
        let seed = raw
            .value("run.seed")?
            .parse()
            .map_err(|_| ConfigError::new("run.seed", "expected an unsigned 64-bit integer"))?;
        let trajectory = trajectory(&raw, num_cpis as f64 * cpi)?;

        let fixed_grid = parse_counts("estimator.grid_counts", raw.value("estimator.grid_counts")?)?;
        let max_counts = parse_counts("estimator.max_counts", raw.value("estimator.max_counts")?)?
            .ok_or_else(|| ConfigError::new("estimator.max_counts", "must be explicit"))?;
        let window = WindowPolicy {
            sigma_multiplier: raw.non_negative("estimator.sigma_multiplier")?,
            floors: [
                raw.non_negative("estimator.floor_theta_deg")?.to_radians(),
                raw.non_negative("estimator.floor_r_m")?,
                raw.non_negative("estimator.floor_vr_mps")?,
                raw.non_negative("estimator.floor_vtheta_mps")?,
            ],
            resolution_fraction: raw.positive("estimator.resolution_fraction")?,
            min_counts: fixed_grid.unwrap_or([3; 4]),
            max_counts: fixed_grid.unwrap_or(max_counts),
        };
        let false_alarm = raw.positive("estimator.false_alarm")?;
        if false_alarm >= 1.0 {
            return Err(ConfigError::new("estimator.false_alarm", "must lie in (0, 1)"));
        }
        let estimator = EstimatorOptions {
            tolerance: raw.non_negative("estimator.tolerance")?,
            noise_tolerance: raw.non_negative("estimator.noise_tolerance")?,
            max_iterations: raw.count("estimator.max_iterations")?,
            transmit_power: budget.transmit_power,
            motion,
            false_alarm,
            ..Default::default()
        };
        let measurement = match raw.value("tracker.r_mode")? {
            "fixed" => {
                let d = raw.floats("tracker.r_fixed_diag")?;
                if d.len() != 4 || d.iter().any(|x| *x < 0.0) {
                    return Err(ConfigError::new(
                        "tracker.r_fixed_diag",
                        "expected four non-negative variances",
                    ));
                }
                MeasurementNoise::Fixed(Matrix4::from_diagonal(&nalgebra::Vector4::from_vec(d)))
            }
            _ => MeasurementNoise::CrbPlugIn,
        };
        let gate = raw.positive("tracker.gate")?;
        let tracker = TrackerConfig {
            noise: NoiseModel { acceleration: raw.non_negative("tracker.q_a")?, measurement },
            gate,
            max_coasts: raw.count("tracker.max_coasts")?,
            angle_update,
            window,
            estimator,
        };
        let initial_access = InitialAccess {
            noise: [
                raw.non_negative("tracker.init_noise_theta_deg")?.to_radians(),
                raw.non_negative("tracker.init_noise_r_m")?,
                raw.non_negative("tracker.init_noise_vr_mps")?,
                raw.non_negative("tracker.init_noise_vtheta_mps")?,
            ],
        };

        let points = raw.count("sweep.points")?;
        let (lo, hi) = (raw.positive("sweep.r_min_rayleigh")?, raw.positive("sweep.r_max_rayleigh")?);
        if hi < lo {
            return Err(ConfigError::new("sweep.r_max_rayleigh", "must not be below sweep.r_min_rayleigh"));
        }
        let d_r = array.rayleigh_distance();
        let ranges = log_spaced(lo * d_r, hi * d_r, points);
        let sweep = SweepConfig {
            theta: angle(&raw, "sweep.theta_rad")?,
            radial_velocity: raw.float("sweep.vr_mps")?,
            transverse_velocity: raw.float("sweep.vtheta_mps")?,
            ranges,
        };
        let mc = McConfig {
            trials: raw.count("mc.trials")?,
            snr_db: raw.floats("mc.snr_db")?,
            theta: angle(&raw, "mc.theta_rad")?,
            r: raw.positive("mc.r_m")?,
            radial_velocity: raw.float("mc.vr_mps")?,
            transverse_velocity: raw.float("mc.vtheta_mps")?,
        };

        Ok(Self {
            raw,
            array,
            clock,
            budget,
            motion,
            trajectory,
            tracker,
            fixed_grid,
            initial_access,
            num_cpis,
            seed,
            sweep,
            mc,
        })
    }

    pub fn noise_power(&self) -> f64 {
        self.budget.noise_power
    }
}

fn angle(raw: &RawConfig, key: &str) -> Result<f64> {
    let t = raw.float(key)?;
    if t > 0.0 && t < PI {
        Ok(t)
    } else {
        Err(ConfigError::new(key, "angle must lie in (0, π)"))
    }
}

/// `count` ranges from `lo` to `hi`, equally spaced in log.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect(),
    }
}

fn trajectory(raw: &RawConfig, duration: f64) -> Result<Trajectory> {
    let kind_name = raw.value("trajectory.kind")?;
    let allowed = trajectory_keys(kind_name);
    for (k, _) in raw.entries() {
        if k.starts_with("trajectory.") && k != "trajectory.kind" && !allowed.contains(&k) {
            return Err(ConfigError::new(k, format!("not used by trajectory.kind = {kind_name}")));
        }
    }
    let center = || -> Result<[f64; 2]> {
        Ok([raw.float("trajectory.center_x_m")?, raw.float("trajectory.center_y_m")?])
    };
    let kind = match kind_name {
        "arc" => TrajectoryKind::CircularArc {
            center: center()?,
            radius: raw.positive("trajectory.radius_m")?,
            angular_rate: raw.float("trajectory.angular_rate_rad_s")?,
            start_phase: raw.float("trajectory.start_phase_rad")?,
        },
        "line" => TrajectoryKind::StraightLine {
            start: [raw.float("trajectory.start_x_m")?, raw.float("trajectory.start_y_m")?],
            velocity: [raw.float("trajectory.velocity_x_mps")?, raw.float("trajectory.velocity_y_mps")?],
        },
        "spiral" => TrajectoryKind::Spiral {
            center: center()?,
            start_radius: raw.positive("trajectory.start_radius_m")?,
            radial_rate: raw.float("trajectory.radial_rate_mps")?,
            angular_rate: raw.float("trajectory.angular_rate_rad_s")?,
            start_phase: raw.float("trajectory.start_phase_rad")?,
        },
        _ => TrajectoryKind::WaypointSequence {
            waypoints: parse_points("trajectory.waypoints", raw.value("trajectory.waypoints")?)?,
            speed: raw.positive("trajectory.speed_mps")?,
        },
    };
    let traj =
        Trajectory::new(kind, duration).map_err(|e| ConfigError::new("trajectory.kind", e.to_string()))?;
    // The whole path must stay in front of the array.
    let steps = (duration / 1e-3).ceil() as usize;
    for i in 0..=steps {
        let t = (i as f64 * 1e-3).min(duration);
        if traj.state_at(t).is_err() {
            return Err(ConfigError::new(
                "trajectory.kind",
                format!("path leaves the half-plane in front of the array at t = {t} s"),
            ));
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "array.N = 16\narray.carrier_frequency_hz = 30e9\nclock.cpi_s = 0.01\nbudget.tx_power_dbm = 30\nbudget.noise_power_dbm = -90\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ScenarioConfig::from_text(MINIMAL).unwrap();
        assert_eq!(c.array.num_elements(), 16);
        assert_eq!(c.clock.snapshots(), 64);
        assert_eq!(c.num_cpis, 200);
        assert_eq!(c.mc.snr_db, vec![20.0, 30.0]);
        assert_eq!(c.sweep.ranges.len(), 12);
        assert!((c.budget.noise_power - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn missing_required_key_is_named() {
        let text = MINIMAL.replace("array.N = 16\n", "");
        let err = ScenarioConfig::from_text(&text).unwrap_err();
        assert_eq!(err.key, "array.N");
        assert!(err.to_string().contains("array.N"));
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        let e = RawConfig::parse("array.M = 3").unwrap_err();
        assert_eq!(e.key, "array.M");
        let e = RawConfig::parse("array.N = 3\narray.N = 4").unwrap_err();
        assert_eq!(e.key, "array.N");
        let e = RawConfig::parse("array.N = three").unwrap_err();
        assert_eq!(e.key, "array.N");
        let e = RawConfig::parse("clock.cpi_s = nan").unwrap_err();
        assert_eq!(e.key, "clock.cpi_s");
        let e = RawConfig::parse("budget.path_loss_mode = free").unwrap_err();
        assert_eq!(e.key, "budget.path_loss_mode");
        let e = RawConfig::parse("just words").unwrap_err();
        assert_eq!(e.key, "line 1");
        let e = RawConfig::parse("estimator.grid_counts = 9 9 7 6").unwrap_err();
        assert_eq!(e.key, "estimator.grid_counts");
    }

    #[test]
    fn comments_and_whitespace() {
        let r = RawConfig::parse("  # header\narray.N=8   # trailing\n\n").unwrap();
        assert_eq!(r.get("array.N"), Some("8"));
        assert!(r.canonical().contains("array.N = 8\n"));
    }

    #[test]
    fn explicit_defaults_hash_like_implicit_ones() {
        let a = RawConfig::parse(MINIMAL).unwrap();
        let b = RawConfig::parse(&format!("{MINIMAL}tracker.q_a = 5\n")).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.effective()["tracker.q_a"], "5");
        assert!(!a.effective().contains_key("trajectory.start_x_m"));
        assert!(a.effective().contains_key("trajectory.radius_m"));
    }

    #[test]
    fn trajectory_keys_must_match_kind() {
        let text = format!("{MINIMAL}trajectory.kind = line\ntrajectory.radius_m = 4\n");
        let e = ScenarioConfig::from_text(&text).unwrap_err();
        assert_eq!(e.key, "trajectory.radius_m");
    }

    #[test]
    fn trajectory_must_stay_in_front() {
        let text = format!(
            "{MINIMAL}trajectory.kind = line\ntrajectory.start_x_m = 0\ntrajectory.start_y_m = 1\ntrajectory.velocity_x_mps = 0\ntrajectory.velocity_y_mps = -10\n"
        );
        let e = ScenarioConfig::from_text(&text).unwrap_err();
        assert_eq!(e.key, "trajectory.kind");
    }

    #[test]
    fn semantic_checks_name_keys() {
        for (line, key) in [
            ("array.N = 1", "array.N"),
            ("clock.snapshots = 1", "clock.snapshots"),
            ("tracker.r_mode = fixed\ntracker.r_fixed_diag = 1 2", "tracker.r_fixed_diag"),
            ("mc.theta_rad = 4", "mc.theta_rad"),
            ("estimator.false_alarm = 2", "estimator.false_alarm"),
        ] {
            let text = MINIMAL
                .lines()
                .filter(|l| !l.starts_with(line.split(" =").next().unwrap()))
                .collect::<Vec<_>>()
                .join("\n")
                + "\n"
                + line;
            let e = ScenarioConfig::from_text(&text).unwrap_err();
            assert_eq!(e.key, key, "{line}");
        }
    }

    #[test]
    fn presets_parse() {
        for (name, _) in PRESETS {
            let c = ScenarioConfig::load(name).unwrap();
            assert!(c.array.num_elements() >= 2, "{name}");
        }
        assert!(ScenarioConfig::load("no_such_preset").is_err());
    }

    #[test]
    fn log_spacing() {
        let r = log_spaced(1.0, 100.0, 3);
        assert!((r[1] - 10.0).abs() < 1e-12);
        assert!(log_spaced(1.0, 2.0, 0).is_empty());
    }
}
