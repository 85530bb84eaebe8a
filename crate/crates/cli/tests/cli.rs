//! End-to-end tests of the coopad binary: commands, exit codes, output
//! formats, determinism, and the run-manifest round trip.

use std::path::Path;
use std::process::{Command, Output};

fn coopad(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coopad"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_default_grid_writes_full_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = coopad(&["solve", "--output", "traj.csv"], dir.path());
    assert!(out.status.success(), "{out:?}");

    let text = std::fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,u1,v");
    assert_eq!(lines.len(), 2002, "header plus 2001 data rows");
    let last: Vec<&str> = lines.last().unwrap().split(',').collect();
    assert_eq!(last[2].parse::<f64>().unwrap(), 0.0, "terminal u1");
    assert_eq!(last[3].parse::<f64>().unwrap(), 0.0, "terminal v");

    assert!(dir.path().join("traj.csv.manifest.json").exists());
}

#[test]
fn optimize_reports_star_zero_for_strong_retailer() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"q1":{"kind":"constant","q0":0.26},"qM":{"kind":"constant","q0":0.02},"grid_steps":400}"#;
    std::fs::write(dir.path().join("config.json"), config).unwrap();
    let out = coopad(
        &[
            "optimize",
            "--config",
            "config.json",
            "--theta-step",
            "0.01",
            "--output",
            "curve.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    assert!(
        stdout(&out).lines().any(|l| l == "theta_star=0"),
        "summary: {}",
        stdout(&out)
    );
    let text = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "theta,JM,Jchannel,feasible");
}

#[test]
fn theta_above_bound_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = coopad(&["solve", "--theta", "1.0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = coopad(&["solve", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(64));
    let out = coopad(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_config_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = coopad(&["solve", "--config", "nope.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn scenario_ii_without_q2_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = coopad(&["solve", "--scenario", "II", "--grid-steps", "100"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_scan_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), r#"{"rho1":50.0,"grid_steps":100}"#).unwrap();
    let out = coopad(
        &["optimize", "--config", "config.json", "--theta-step", "0.1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = coopad(
            &["solve", "--grid-steps", "500", "--theta", "0.3", "--output", name],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

/// The config snapshot embedded in a run manifest reproduces the run
/// exactly: feeding it back as the config file yields a byte-identical
/// output with no flags at all.
#[test]
fn manifest_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("config.json"),
        r#"{"scenario":"II","q2":{"kind":"linear","start":0.05,"end":0.25},"x0":0.3}"#,
    )
    .unwrap();
    let out = coopad(
        &[
            "solve",
            "--config",
            "config.json",
            "--grid-steps",
            "300",
            "--output",
            "a.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["grid"]["grid_steps"], 300, "flag override captured");
    std::fs::write(
        dir.path().join("echoed.json"),
        serde_json::to_string(&manifest["config"]).unwrap(),
    )
    .unwrap();

    let out = coopad(
        &["solve", "--config", "echoed.json", "--output", "b.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_format_mirrors_csv_content() {
    let dir = tempfile::tempdir().unwrap();
    let csv = coopad(&["solve", "--grid-steps", "100"], dir.path());
    let json = coopad(&["solve", "--grid-steps", "100", "--format", "json"], dir.path());
    assert!(csv.status.success() && json.status.success());

    let doc: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(doc["columns"], serde_json::json!(["t", "x", "u1", "v"]));
    let rows = doc["rows"].as_array().unwrap();
    let csv_text = stdout(&csv);
    let csv_lines: Vec<&str> = csv_text.lines().skip(1).collect();
    assert_eq!(rows.len(), csv_lines.len());
    for (row, line) in rows.iter().zip(&csv_lines) {
        for (cell, field) in row.as_array().unwrap().iter().zip(line.split(',')) {
            // JSON carries the exact value; CSV rounds to 13 significant
            // digits, so compare at that precision.
            let want: f64 = field.parse().unwrap();
            let got = cell.as_f64().unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
}

#[test]
fn sweep_emits_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{
        "axes": [
            {"kind": "scalar", "field": "q1", "values": [0.05, 0.15, 0.25]},
            {"kind": "schedules", "target": "qM",
             "schedules": [
                {"label": "flat", "schedule": {"kind": "constant", "q0": 0.15}},
                {"label": "rising", "schedule": {"kind": "linear", "start": 0.05, "end": 0.25}}
             ]}
        ],
        "theta_step": 0.1
    }"#;
    std::fs::write(dir.path().join("spec.json"), spec).unwrap();
    let out = coopad(
        &["sweep", "--spec", "spec.json", "--grid-steps", "100"],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(
        lines[0],
        "q1,qM,feasible,theta_star,theta_bar,J1,J2,JM,Jchannel"
    );
    assert_eq!(lines.len(), 7, "header plus 3 x 2 rows");
    assert!(lines[1].starts_with("0.05,flat,true,"));
}

#[test]
fn compare_needs_a_competitive_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = coopad(&["compare", "--grid-steps", "100"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compare_pairs_both_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("config.json"),
        r#"{"scenario":"II","q2":{"kind":"constant","q0":0.15},"grid_steps":200}"#,
    )
    .unwrap();
    let out = coopad(
        &[
            "compare",
            "--config",
            "config.json",
            "--theta-step",
            "0.05",
            "--output",
            "cmp.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let text = std::fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("t,x_worc,x_wrc,u1_worc,u1_wrc,v_worc,v_wrc,u2_wrc"));
    assert_eq!(text.lines().count(), 202);
    let summary = stdout(&out);
    for key in ["theta_star_worc=", "theta_star_wrc=", "matched_theta=", "delta_jchannel="] {
        assert!(summary.contains(key), "missing {key} in {summary}");
    }
}
