use std::path::Path;
use std::process::{Command, Output};

use nfpb_sim::experiments::run_mc_rmse;
use nfpb_sim::ScenarioConfig;
use serde_json::Value;

const SHORT_TRACK: &str = "array.N = 256
array.carrier_frequency_hz = 30e9
clock.cpi_s = 0.01
clock.snapshots = 64
budget.tx_power_dbm = 30
budget.noise_power_dbm = -50
budget.path_loss_mode = radar
trajectory.kind = arc
trajectory.center_x_m = 2
trajectory.center_y_m = 16
trajectory.radius_m = 5
trajectory.angular_rate_rad_s = 0.6
trajectory.start_phase_rad = 3.141592653589793
tracker.init_noise_theta_deg = 0.1
run.num_cpis = 8
";

fn nfpb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfpb")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn missing_required_key_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let text: String =
        SHORT_TRACK.lines().filter(|l| !l.starts_with("array.N")).map(|l| format!("{l}\n")).collect();
    let cfg = write(tmp.path(), "bad.cfg", &text);
    let out = nfpb(&["track", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("array.N"));
    assert_eq!(ScenarioConfig::from_text(&text).unwrap_err().key, "array.N");
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.cfg", &format!("{SHORT_TRACK}tracker.qa = 3\n"));
    let out = nfpb(&["track", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tracker.qa"));
}

#[test]
fn unknown_preset_and_bad_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("o");
    assert_eq!(nfpb(&["track", "--config", "nope", "--out", o.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(nfpb(&["fly", "--config", "fig1", "--out", o.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn track_writes_csv_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "t.cfg", SHORT_TRACK);
    let o = tmp.path().join("o");
    let out = nfpb(&["track", "--config", &cfg, "--out", o.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(&o.join("track.csv"));
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0].len(), 26);
    assert_eq!(rows[0][0], "cpi_index");
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(o.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["subcommand"], "track");
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["config"]["run.num_cpis"], "8");
    assert_eq!(summary["config"]["tracker.q_a"], "5");
    assert!(summary["config"].get("trajectory.start_x_m").is_none());
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    assert!(summary["versions"]["nfpb-core"].is_string());
}

#[test]
fn seed_changes_noise_but_not_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "t.cfg", SHORT_TRACK);
    let mut tables = vec![];
    for seed in ["1", "2"] {
        let o = tmp.path().join(seed);
        assert_eq!(
            nfpb(&["track", "--config", &cfg, "--out", o.to_str().unwrap(), "--seed", seed]).status.code(),
            Some(0)
        );
        tables.push(read_rows(&o.join("track.csv")));
    }
    for (a, b) in tables[0].iter().zip(&tables[1]).skip(1) {
        assert_eq!(a[..5], b[..5]);
        assert_ne!(a[5..9], b[5..9]);
    }
}

#[test]
fn lost_track_keeps_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SHORT_TRACK
        .replace("tx_power_dbm = 30", "tx_power_dbm = -60")
        .replace("num_cpis = 8", "num_cpis = 20");
    let cfg = write(tmp.path(), "t.cfg", &text);
    let o = tmp.path().join("o");
    let out = nfpb(&["track", "--config", &cfg, "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let rows = read_rows(&o.join("track.csv"));
    assert_eq!(rows.len(), 1 + 6);
    assert!(rows[1..].iter().all(|r| r.last().unwrap() == "1"));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(o.join("summary.json")).unwrap()).unwrap();
    assert!(summary["status"].as_str().unwrap().contains("lost"));
}

#[test]
fn zero_trials_give_an_empty_table() {
    let text = format!(
        "{}\nmc.trials = 0\n",
        nfpb_sim::config::preset("mc_rmse").unwrap().replace("mc.trials = 100", "")
    );
    let cfg = ScenarioConfig::from_text(&text).unwrap();
    assert!(run_mc_rmse(&cfg, 1).unwrap().is_empty());

    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "m.cfg", &text);
    let o = tmp.path().join("o");
    assert_eq!(nfpb(&["mc-rmse", "--config", &path, "--out", o.to_str().unwrap()]).status.code(), Some(0));
    let rows = read_rows(&o.join("mc_rmse.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].join(","), nfpb_sim::experiments::MC_HEADER);
}

#[test]
fn crb_sweep_frozen_values() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("o");
    assert_eq!(nfpb(&["crb-sweep", "--config", "fig1", "--out", o.to_str().unwrap()]).status.code(), Some(0));
    let rows = read_rows(&o.join("crb_sweep.csv"));
    assert_eq!(rows.len(), 13);
    let first: Vec<f64> = rows[1][..5].iter().map(|v| v.parse().unwrap()).collect();
    let expected = [
        6.962144493374999,
        2.9553607009110846e-12,
        4.4103855549774883e-10,
        1.1240818209083924e-10,
        3.6788228579754596e-9,
    ];
    for (a, b) in first.iter().zip(expected) {
        assert!((a - b).abs() <= 1e-6 * b, "{a} vs {b}");
    }
    assert!(rows[1..].iter().all(|r| r[6] == "0"));
}

#[test]
fn estimate_once_recovers_the_first_state() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("o");
    let out = nfpb(&["estimate-once", "--config", "case_study", "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_rows(&o.join("estimate.csv"));
    let v: Vec<f64> = rows[1].iter().map(|x| x.parse().unwrap()).collect();
    for i in 0..2 {
        assert!((v[4 + i] - v[i]).abs() < 5.0 * v[8 + i], "param {i}: {v:?}");
    }
    assert_eq!(v[15], 0.0);
}
