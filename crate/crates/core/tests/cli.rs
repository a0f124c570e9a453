use std::path::Path;
use std::process::{Command, Output};

use qlidar::qfi_quantum::{regime_of, Regime, RegimeThresholds};
use serde_json::Value;

fn qlidar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlidar"))
        .args(args)
        .env_remove("QLIDAR_THREADS")
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Splits a CSV artifact into manifest lines and parsed data rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let manifest: Vec<String> = text.lines().take_while(|l| l.starts_with('#')).map(String::from).collect();
    let rows = text
        .lines()
        .skip(manifest.len() + 1)
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (manifest, rows)
}

#[test]
fn qfi_reports_examples() {
    let v = json(&qlidar(&["qfi", "--xi", "1", "--K", "1"]));
    let r = v["advantage_ratio"].as_f64().unwrap();
    assert!((r - 1.0).abs() < 1e-3, "{r}");
    assert_eq!(v["regime"]["regime"], "NoEntanglement");
    assert_eq!(v["config"]["xi"], "1");

    let v = json(&qlidar(&["qfi", "--xi", "100", "--K", "100"]));
    assert_eq!(v["regime"]["regime"], "Mixed");
    let h = v["normalized_heisenberg_qfi"].as_f64().unwrap();
    assert!((0.8..=1.2).contains(&h), "{h}");
}

#[test]
fn qfi_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let out = qlidar(&["qfi", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["breakdown"]["j_q"].as_f64().unwrap() > 0.0);
}

#[test]
fn malformed_input_is_a_usage_error() {
    for args in [
        &["qfi", "--xi", "abc"][..],
        &["qfi", "--xi=-1"],
        &["qfi", "--K", "0.5"],
        &["bogus"],
        &["loss", "--eta", "0.5,1.5"],
        &["simulate", "--M", "0"],
        &["scan", "--xi-n", "0"],
    ] {
        let out = qlidar(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(qlidar(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let bad = file.join("sub.csv");
    assert_eq!(qlidar(&["loss", "--out", bad.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(qlidar(&["scan", "--out-dir", file.to_str().unwrap()]).status.code(), Some(3));
    let missing = dir.path().join("missing.conf");
    assert_eq!(qlidar(&["--config", missing.to_str().unwrap(), "qfi"]).status.code(), Some(3));
}

const SMALL_SCAN: [&str; 12] =
    ["scan", "--fig2-xi-n", "41", "--xi-n", "15", "--K-n", "15", "--xi-min", "10", "--K-min", "10", "--out-dir"];

fn run_scan(dir: &Path, extra: &[&str], threads_env: Option<&str>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qlidar"));
    // relative out-dir so the manifests do not record the temp path
    cmd.current_dir(dir).args(SMALL_SCAN).arg(".").args(extra).env("RUST_LOG", "off").env_remove("QLIDAR_THREADS");
    if let Some(t) = threads_env {
        cmd.env("QLIDAR_THREADS", t);
    }
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scan_is_deterministic_across_thread_counts() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    run_scan(dirs[0].path(), &["--threads", "1"], None);
    run_scan(dirs[1].path(), &["--threads", "4"], None);
    run_scan(dirs[2].path(), &[], Some("3"));
    for name in ["fig2_K10.csv", "fig2_K20.csv", "fig3_grid.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        for d in &dirs[1..] {
            assert!(a == std::fs::read(d.path().join(name)).unwrap(), "{name} differs");
        }
    }
}

#[test]
fn scan_artifacts_have_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    run_scan(dir.path(), &[], None);

    let (manifest, grid) = read_csv(&dir.path().join("fig3_grid.csv"));
    assert_eq!(manifest.len(), 8);
    assert!(manifest[1].contains("scan"));
    assert!(manifest.iter().any(|l| l.contains("rows: 225")));
    assert_eq!(grid.len(), 225);
    let th = RegimeThresholds::default();
    let mut mixed: Vec<f64> =
        grid.iter().filter(|r| regime_of(r[0], r[1], &th) == Regime::Mixed).map(|r| r[2]).collect();
    assert!(!mixed.is_empty());
    mixed.sort_by(f64::total_cmp);
    let median = mixed[mixed.len() / 2];
    assert!((0.8..=1.2).contains(&median), "mixed median {median}");

    for k in [10, 20] {
        let (manifest, rows) = read_csv(&dir.path().join(format!("fig2_K{k}.csv")));
        assert_eq!(manifest.len(), 8);
        assert_eq!(rows.len(), 41);
        let dip = (0..rows.len()).min_by(|&a, &b| rows[a][1].total_cmp(&rows[b][1])).unwrap();
        assert!(rows[0][1] > 1.0 && rows[dip][1] < 1.0);
        assert!(rows[dip..].windows(2).all(|w| w[1][1] >= w[0][1] - 1e-9), "K={k} not monotone after the dip");
        let last = rows.last().unwrap();
        assert!((last[1] - 1.0).abs() < 1e-3 && last[2] < 1e-3, "K={k} tail {last:?}");
    }
}

#[test]
fn loss_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loss.csv");
    let out = qlidar(&["loss", "--eta", "0,0.1,0.5,0.9,1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let (manifest, rows) = read_csv(&path);
    assert_eq!(manifest.len(), 8);
    assert_eq!(rows.len(), 5);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().nth(8).unwrap().starts_with("eta,J_closed,J_pipeline"));
    // eta = 0: nothing comes back
    assert_eq!((rows[0][1], rows[0][2]), (0.0, 0.0));
    assert!(rows[0][3].is_nan());
    for r in &rows[1..] {
        assert!((r[2] / r[1] - 1.0).abs() < 5e-3, "eta {}: {r:?}", r[0]);
    }
    assert_eq!(rows[2][4], 2.0);
    assert!((rows[2][3] - 2.0).abs() < 0.05);
    assert!(rows[4][4].is_infinite());
}

#[test]
fn simulate_echoes_seed_and_exports_events() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("ev.csv");
    let args = ["simulate", "--M", "500", "--reps", "4", "--seed", "99", "--events-out", events.to_str().unwrap()];
    let v = json(&qlidar(&args));
    assert_eq!(v["seed"], 99);
    assert_eq!(v["config"]["seed"], "99");
    assert_eq!(v["replications"], 4);
    assert_eq!(v["estimates"].as_array().unwrap().len(), 4);
    let text = std::fs::read_to_string(&events).unwrap();
    assert_eq!(text.lines().next().unwrap(), "omega,omega_tilde");
    assert_eq!(text.lines().count(), 501);
    // reruns are reproducible
    let again = json(&qlidar(&args));
    assert_eq!(v["estimates"], again["estimates"]);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# probe settings\nxi = 0.5\nK = 400\nthreads = 2\n").unwrap();
    let c = conf.to_str().unwrap();
    let v = json(&qlidar(&["--config", c, "qfi"]));
    assert_eq!(v["config"]["xi"], "0.5");
    assert_eq!(v["config"]["K"], "400");
    assert_eq!(v["regime"]["regime"], "HighEntanglement");
    let v = json(&qlidar(&["--config", c, "qfi", "--K", "1"]));
    assert_eq!(v["config"]["K"], "1");
    assert_eq!(v["config"]["xi"], "0.5");

    std::fs::write(&conf, "xi = 0.5\nbogus_key = 1\n").unwrap();
    assert_eq!(qlidar(&["--config", c, "qfi"]).status.code(), Some(2));
    std::fs::write(&conf, "xi 0.5\n").unwrap();
    assert_eq!(qlidar(&["--config", c, "qfi"]).status.code(), Some(2));
}
