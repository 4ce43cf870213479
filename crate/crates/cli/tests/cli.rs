use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hylleraas"))
        .args(args)
        .current_dir(dir)
        .env_remove("HYLLERAAS_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid json")
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn help_exits_zero_for_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["solve", "entropy", "density", "expect", "scan-z", "gl-nodes", "validate"] {
        let out = run(dir.path(), &[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        assert!(text(&out.stdout).contains("Usage"));
    }
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run(p, &["solve", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(p, &["solve", "--system", "he", "--omega", "nine"]).status.code(), Some(2));
    assert_eq!(run(p, &["solve", "--system", "xenon", "--omega", "3"]).status.code(), Some(2));
    assert_eq!(run(p, &["solve", "--system", "he"]).status.code(), Some(2));
    assert_eq!(run(p, &["gl-nodes", "--order", "4", "--precision-bits", "0"]).status.code(), Some(2));
    assert_eq!(run(p, &["scan-z", "--from", "1.0", "--to", "0.9"]).status.code(), Some(2));
    std::fs::write(p.join("bad.cfg"), "omega = 4\nflavour = he\n").unwrap();
    assert_eq!(run(p, &["solve", "--config", "bad.cfg"]).status.code(), Some(2));
}

#[test]
fn solve_entropy_expect_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = run(p, &["solve", "--system", "he", "--omega", "4", "--out", "wf.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report = json(&out.stdout);
    let energy: f64 = report["energy"].as_str().unwrap().parse().unwrap();
    assert!(energy < -2.9036 && energy > -2.9038, "{energy}");
    let archive = json(&std::fs::read(p.join("wf.json")).unwrap());
    assert_eq!(archive["metadata"]["manifest"], "wf.json.manifest.json");
    assert_eq!(archive["precision_bits"], 256);

    let manifest = json(&std::fs::read(p.join("wf.json.manifest.json")).unwrap());
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["config"]["omega"], "4");
    let digests = manifest["outputs"].as_array().unwrap();
    assert!(digests.iter().any(|d| d["path"] == "wf.json"));
    assert!(digests.iter().any(|d| d["path"] == "<stdout>"));

    let out = run(p, &["entropy", "--wavefunction", "wf.json", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let s = json(&std::fs::read(p.join("s.json")).unwrap());
    let s_r: f64 = s["S_r"].as_str().unwrap().parse().unwrap();
    assert!((s_r - 2.705).abs() < 1e-2, "{s_r}");
    assert_eq!(s["converged"], true);
    assert_eq!(s["manifest"], "s.json.manifest.json");
    assert!(p.join("s.json.manifest.json").exists());

    let out = run(p, &["expect", "--wavefunction", "wf.json", "--manifest", "m.json"]);
    assert_eq!(out.status.code(), Some(0));
    let e = json(&out.stdout);
    let r1: f64 = e["r1"].as_str().unwrap().parse().unwrap();
    let r12: f64 = e["r12"].as_str().unwrap().parse().unwrap();
    assert!((r1 - 0.9295).abs() < 2e-3 && (r12 - 1.4221).abs() < 5e-3, "{r1} {r12}");
    assert!(p.join("m.json").exists());

    let out = run(p, &["density", "--wavefunction", "wf.json", "--rmax", "4", "--points", "8", "--out", "d.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(p.join("d.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "# manifest: d.csv.manifest.json");
    assert_eq!(lines[1], "r,rho,4*pi*r^2*rho");
    assert_eq!(lines.len(), 10);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("run.cfg"), "# gl\norder = 3\nscale = 2\n").unwrap();
    let out = run(p, &["gl-nodes", "--config", "run.cfg", "--order", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert_eq!(stdout.lines().count(), 2 + 5);
    let manifest = json(&std::fs::read(p.join("gl-nodes.manifest.json")).unwrap());
    assert_eq!(manifest["config"]["order"], "5");
    assert_eq!(manifest["config"]["scale"], "2");
}

#[test]
fn identical_invocations_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = ["solve", "--system", "psminus", "--omega", "3", "--budget", "40", "--out", "wf.json"];
    let first = run(p, &args);
    let a = std::fs::read(p.join("wf.json")).unwrap();
    let second = run(p, &args);
    let b = std::fs::read(p.join("wf.json")).unwrap();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(a, b);
}

#[test]
fn validate_reports_pass_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["validate", "--integral-samples", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let stdout = text(&out.stdout);
    assert!(stdout.lines().skip(1).all(|l| l.starts_with("PASS")), "{stdout}");
    assert_eq!(stdout.lines().count(), 1 + 1 + 3 + 3);
}
