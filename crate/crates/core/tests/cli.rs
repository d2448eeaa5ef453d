mod common;

use std::process::Command as Proc;

use anosov::cli::{run, Command};
use anosov::graph::Side;
use common::*;

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_anosov"))
}

#[test]
fn verify_on_the_cat_scenario_reports_the_golden_rate() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["--command", "verify", "--quiet", "--scenario"])
        .arg(scenario_path("cat_linear"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("verify.json")).unwrap()).unwrap();
    let lambda = doc["report"]["certificate"]["lambda"].as_f64().unwrap();
    assert!((lambda - 0.381966).abs() < 1e-6);
    assert_eq!(doc["report"]["certificate"]["passes"], true);
}

#[test]
fn reports_embed_the_resolved_scenario() {
    let s = bundled("skewed_eigen");
    let art = run(Command::Schedule, &s).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&art.files["schedule.json"]).unwrap();
    // defaults that the file leaves out are filled in
    assert_eq!(doc["scenario"]["tolerances"]["fixed_point"], 1e-10);
    assert_eq!(doc["scenario"]["params"]["safety"], 1.25);
    assert_eq!(doc["scenario"]["family"]["metric"]["law"], "skewed_eigen");
    let back: anosov::scenario::Scenario = serde_json::from_value(doc["scenario"].clone()).unwrap();
    assert_eq!(back, s);
}

#[test]
fn linear_unstable_csv_is_collinear() {
    let art = run(Command::Manifold(Side::Unstable), &bundled("cat_linear")).unwrap();
    let csv = &art.files["manifold_u.csv"];
    assert!(csv.starts_with("n,w,phi,x,y\n"));
    let (eu, _) = cat_eigenvectors();
    for line in csv.lines().skip(1) {
        let c: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((c[3] * eu[1] - c[4] * eu[0]).abs() <= 1e-10);
    }
    let svgs = art.files.keys().filter(|k| k.ends_with(".svg")).count();
    assert_eq!(svgs, 17);
    assert!(art.files["manifold_u_n0.svg"].contains("viewBox=\"0 0 1000 1000\""));
}

#[test]
fn window_one_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n1.toml");
    std::fs::write(&path, "name = \"n1\"\n[family]\nlinear = [[2, 1], [1, 1]]\n[run]\nwindow = 1\n").unwrap();
    let out = bin()
        .args(["--command", "verify", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));
}

#[test]
fn unknown_keys_report_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"bad\"\n[family]\nlinear = [[2, 1], [1, 1]]\n[run]\nwindwo = 4\n").unwrap();
    let out = bin()
        .args(["--command", "schedule", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5") && err.contains("windwo"), "{err}");
}

#[test]
fn unknown_command_and_side_are_rejected() {
    assert!(Command::parse("manifold", Some("x")).is_err());
    assert!(Command::parse("plot", None).is_err());
    assert_eq!(Command::parse("manifold", Some("s")).unwrap(), Command::Manifold(Side::Stable));
}

#[test]
fn non_hyperbolic_family_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.toml");
    std::fs::write(&path, "name = \"id\"\n[family]\nlinear = [[1, 1], [0, 1]]\n").unwrap();
    let out = bin()
        .args(["--command", "schedule", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn in_process_runs_are_deterministic() {
    for name in bundled_names() {
        let s = bundled(name);
        for cmd in [Command::Decay, Command::Coincidence, Command::ProbeExpansivity] {
            assert_eq!(run(cmd, &s).unwrap(), run(cmd, &s).unwrap(), "{name} {cmd:?}");
        }
    }
}
