//! Command-line front end.
//!
//! Exit status: 0 on success, 2 on a configuration or usage error, 3 on a
//! runtime failure such as a lost track.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::config::ScenarioConfig;
use crate::experiments::{
    crb_sweep, estimate_once, run_mc_rmse, sweep_row_csv, CRB_SWEEP_HEADER, ESTIMATE_HEADER, MC_HEADER,
};
use crate::output::{config_hash, write_csv, write_json};
use crate::scenario::{run_nfpb, TRACK_HEADER};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nfpb", version, about = "Near-field predictive beamforming simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bounds versus range at a fixed angle and velocity.
    CrbSweep(Common),
    /// Closed-loop tracking along the configured trajectory.
    Track(Common),
    /// One CPI estimated from scratch with the global search.
    EstimateOnce(Common),
    /// Estimator RMSE against the bound over seeded trials.
    McRmse(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config file or preset name (case_study, fig1, mc_rmse).
    #[arg(long)]
    pub config: String,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<nfpb_core::Error> for Failure {
    fn from(e: nfpb_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Parses `argv` (program name first), runs, and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(Failure::Config(m)) => {
            eprintln!("{m}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("runtime failure: {m}");
            EXIT_RUNTIME
        }
    }
}

fn execute(cmd: &Command) -> Result<(), Failure> {
    let (name, common) = match cmd {
        Command::CrbSweep(c) => ("crb-sweep", c),
        Command::Track(c) => ("track", c),
        Command::EstimateOnce(c) => ("estimate-once", c),
        Command::McRmse(c) => ("mc-rmse", c),
    };
    let cfg = ScenarioConfig::load(&common.config).map_err(|e| Failure::Config(e.to_string()))?;
    let seed = common.seed.unwrap_or(cfg.seed);
    std::fs::create_dir_all(&common.out)?;
    let out = common.out.as_path();
    let started = Instant::now();
    let (outputs, status) = match cmd {
        Command::CrbSweep(_) => {
            let rows = crb_sweep(&cfg, seed)?;
            write_csv(&out.join("crb_sweep.csv"), CRB_SWEEP_HEADER, rows.iter().map(sweep_row_csv))?;
            (vec!["crb_sweep.csv"], Ok(()))
        }
        Command::Track(_) => {
            let run = run_nfpb(&cfg, seed)?;
            write_csv(&out.join("track.csv"), TRACK_HEADER, run.records.iter().map(|r| r.csv_row()))?;
            let status = match (&run.failure, run.lost_at) {
                (Some(f), _) => Err(Failure::Runtime(f.clone())),
                (None, Some(k)) => Err(Failure::Runtime(format!("track lost at CPI {k}"))),
                (None, None) => Ok(()),
            };
            (vec!["track.csv"], status)
        }
        Command::EstimateOnce(_) => {
            let once = estimate_once(&cfg, seed)?;
            write_csv(&out.join("estimate.csv"), ESTIMATE_HEADER, [once.csv_row()])?;
            (vec!["estimate.csv"], Ok(()))
        }
        Command::McRmse(_) => {
            let rows = run_mc_rmse(&cfg, seed)?;
            write_csv(&out.join("mc_rmse.csv"), MC_HEADER, rows.iter().map(|r| r.csv_row()))?;
            (vec!["mc_rmse.csv"], Ok(()))
        }
    };
    write_summary(out, name, &cfg, seed, &outputs, started, &status)?;
    status
}

fn write_summary(
    out: &Path,
    subcommand: &str,
    cfg: &ScenarioConfig,
    seed: u64,
    outputs: &[&str],
    started: Instant,
    status: &Result<(), Failure>,
) -> std::io::Result<()> {
    let config: Map<String, Value> =
        cfg.raw.effective().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
    let status = match status {
        Ok(()) => "ok".to_string(),
        Err(Failure::Runtime(m) | Failure::Config(m)) => m.clone(),
    };
    let summary = json!({
        "subcommand": subcommand,
        "seed": seed,
        "config": config,
        "config_hash": config_hash(&cfg.raw.canonical()),
        "versions": {
            "nfpb-sim": env!("CARGO_PKG_VERSION"),
            "nfpb-core": nfpb_core::VERSION,
        },
        "wall_time_s": started.elapsed().as_secs_f64(),
        "outputs": outputs,
        "status": status,
    });
    write_json(&out.join("summary.json"), &summary)
}
