//! End-to-end runs of the `plap` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plap::{COMPARE_SUMMARY_SCHEMA, VERIFY_REPORT_SCHEMA};
use serde_json::Value;
use tempfile::TempDir;

fn plap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(args)
        .env_remove("PLAP_LOG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn assert_valid(schema: &str, doc: &Value) {
    let schema: Value = serde_json::from_str(schema).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    lines
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_single_pole_is_p_harmonic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "single.json",
        r#"{"version": 1, "params": {"p": 3.5, "n": 3},
            "poles": [{"weight": 2, "location": [0.1, 0.2, 0.3]}],
            "points": [[1, 0, 0], [-0.4, 0.9, 2.0], [0.0, -1.5, 0.2]]}"#,
    );
    let out = plap(&["eval", "--config", path_str(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    let closed = column(&csv, "delta_p_closed_form");
    assert_eq!(closed.len(), 3);
    for v in closed {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0);
    }
    for v in column(&csv, "delta_p_direct") {
        assert!(v.parse::<f64>().unwrap().abs() < 1e-10, "{v}");
    }
}

#[test]
fn eval_p2_superposition_is_harmonic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "p2.json",
        r#"{"version": 1, "params": {"p": 2, "n": 3},
            "random_poles": {"count": 5, "lower": [-1, -1, -1], "upper": [1, 1, 1]},
            "random_points": {"count": 10, "lower": [-2, -2, -2], "upper": [2, 2, 2]},
            "min_pole_distance": 0.1, "seed": 7}"#,
    );
    let out = plap(&["eval", "--config", path_str(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    for v in column(&stdout(&out), "delta_p_closed_form") {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn eval_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "random.json",
        r#"{"version": 1, "params": {"p": 3, "n": 2},
            "random_poles": {"count": 4, "lower": [-1, -1], "upper": [1, 1]},
            "random_points": {"count": 25, "lower": [-2, -2], "upper": [2, 2]}}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (path, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let out = plap(&[
            "eval",
            "--config",
            path_str(&cfg),
            "--seed",
            seed,
            "--out",
            path_str(path),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    assert_ne!(a, std::fs::read(c).unwrap());
}

#[test]
fn sign_map_classes() {
    let out = plap(&[
        "sign-map", "--p-min", "1", "--p-max", "3", "--p-step", "0.5", "--n-min", "2", "--n-max",
        "3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p,n,class");
    assert_eq!(lines.len(), 1 + 5 * 2);
    let class = |p: &str, n: &str| {
        lines[1..]
            .iter()
            .map(|l| l.split(',').collect::<Vec<_>>())
            .find(|r| r[0].parse::<f64>().unwrap() == p.parse::<f64>().unwrap() && r[1] == n)
            .map(|r| r[2].to_string())
            .unwrap()
    };
    assert_eq!(class("3", "2"), "NonPositive");
    assert_eq!(class("2", "3"), "IdenticallyZero");
    assert_eq!(class("1", "2"), "Excluded");
    assert_eq!(class("1.5", "2"), "NonNegative");
}

#[test]
fn verify_report_matches_schema() {
    for suite in ["superpose", "evolution"] {
        let out = plap(&["verify", "--suite", suite, "--seed", "3"]);
        assert!(out.status.success(), "{suite}: {}", stdout(&out));
        let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_valid(VERIFY_REPORT_SCHEMA, &doc);
        assert_eq!(doc["suite"], suite);
        assert_eq!(doc["passed"], true);
        assert!(!doc["checks"].as_array().unwrap().is_empty());
    }
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = plap(&["verify", "--suite", "foo"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("foo"));
}

#[test]
fn bad_config_reports_location() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.json",
        "{\"version\": 1,\n  \"params\": {\"p\": 3, \"n\": 2},\n  \"pols\": []}",
    );
    let out = plap(&["eval", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("pols") && err.contains("line 3"), "{err}");

    let cfg = write_config(
        &dir,
        "syntax.json",
        "{\"version\": 1,\n  \"params\": {\"p\": 3 \"n\": 2}}",
    );
    let out = plap(&["eval", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let out = plap(&["eval", "--config", "/nonexistent/plap.json"]);
    assert_eq!(out.status.code(), Some(3));
}

const FUNDAMENTAL_GRID: &str = r#""grid": {"lower": [-1, -1], "upper": [1, 1], "nodes": [17, 17]}"#;

#[test]
fn compare_reproduces_the_fundamental_solution() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "fundamental.json",
        &format!(
            r#"{{"version": 1, "params": {{"p": 3, "n": 2}},
                "poles": [{{"weight": 1, "location": [2.0, 0.3]}}], {FUNDAMENTAL_GRID}}}"#
        ),
    );
    let csv_path = dir.path().join("grid.csv");
    let out = plap(&[
        "compare",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&csv_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_valid(COMPARE_SUMMARY_SCHEMA, &doc);
    assert_eq!(doc["violations"], 0);
    assert_eq!(doc["passed"], true);
    // W is p-harmonic away from its pole, so h = W up to discretization error
    assert!(doc["min_gap"].as_f64().unwrap().abs() < 5e-3, "{doc}");

    let csv = std::fs::read_to_string(csv_path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x0,x1,W,h,gap,kind,excised");
    assert_eq!(csv.lines().count(), 1 + 17 * 17);
    let kinds = column(&csv, "kind");
    assert_eq!(kinds.iter().filter(|k| *k == "boundary").count(), 4 * 16);
}

#[test]
fn compare_superposition_and_shift() {
    let dir = TempDir::new().unwrap();
    let poles = r#""poles": [{"weight": 1, "location": [0.3, 0.1]}, {"weight": 0.5, "location": [-0.4, -0.2]}]"#;
    let base =
        format!(r#"{{"version": 1, "params": {{"p": 2.5, "n": 2}}, {poles}, {FUNDAMENTAL_GRID}"#);
    let cfg = write_config(&dir, "super.json", &format!("{base}}}"));
    let out = plap(&["compare", "--config", path_str(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["violations"], 0, "{doc}");
    assert!(doc["min_gap"].as_f64().unwrap() >= -1e-3);

    let cfg = write_config(
        &dir,
        "shift.json",
        &format!(r#"{base}, "boundary_shift": -1}}"#),
    );
    let out = plap(&["compare", "--config", path_str(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["min_gap"].as_f64().unwrap() >= 1.0 - 1e-3, "{doc}");
}

#[test]
fn evolution_sweep_default_and_homogeneous() {
    let out = plap(&["evolution-sweep"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    assert_eq!(
        csv.lines().next().unwrap(),
        "r,B,B_t,defect,defect_sign,flag"
    );
    let r = column(&csv, "r");
    let sign = column(&csv, "defect_sign");
    // the defect changes sign once, at r = 7.2^{1/3} for the default kernel
    let crossing = sign
        .windows(2)
        .position(|w| w[0] != w[1] && w[0] != "0" && w[1] != "0");
    if let Some(i) = crossing {
        let lo: f64 = r[i].parse().unwrap();
        let hi: f64 = r[i + 1].parse().unwrap();
        let root = 7.2f64.cbrt();
        assert!(lo <= root && root <= hi, "{lo} {hi}");
    } else {
        panic!("no sign change in {sign:?}");
    }

    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "homog.json",
        r#"{"version": 1, "params": {"p": 3, "n": 2},
            "kernel": {"kind": "homogeneous", "y": [0.5, 0], "samples": 8}}"#,
    );
    let path = dir.path().join("h.csv");
    let out = plap(&[
        "evolution-sweep",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,W,W_t,defect,defect_sign");
    assert_eq!(csv.lines().count(), 9);
}
