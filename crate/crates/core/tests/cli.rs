use std::path::Path;
use std::process::{Command, Output};

fn qsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsc")).args(args).output().expect("spawn qsc")
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn entropy_curve_table() {
    let out = qsc(&["entropy-curve", "--dims", "2..4", "--steps", "11"]);
    assert!(out.status.success());
    let rows = data_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 33);
    let lookup = |d: &str, l: f64| -> f64 {
        let row = rows
            .iter()
            .find(|r| r[0] == d && (r[1].parse::<f64>().unwrap() - l).abs() < 1e-12)
            .unwrap();
        row[2].parse().unwrap()
    };
    assert!((lookup("4", 0.0) - 2.0).abs() < 1e-12);
    assert!((lookup("2", 0.5) - 0.811278).abs() < 1e-6);
    assert!(lookup("3", 1.0).abs() < 1e-12);
}

#[test]
fn fidelity_curve_table() {
    let out = qsc(&["fidelity-curve", "--dims", "5,10", "--p-min", "0", "--p-max", "1", "--steps", "6"]);
    assert!(out.status.success());
    let rows = data_rows(&String::from_utf8(out.stdout).unwrap());
    let at = |d: &str| -> f64 {
        rows.iter()
            .find(|r| r[0] == d && (r[1].parse::<f64>().unwrap() - 0.2).abs() < 1e-12)
            .map(|r| r[2].parse().unwrap())
            .unwrap()
    };
    assert!((at("5") - 0.84).abs() < 1e-12);
    assert!((at("10") - 0.82).abs() < 1e-12);
}

#[test]
fn traffic_defaults_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = qsc(&["traffic", "--seed", "11", "--out", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = read(&a);
    assert_eq!(text, read(&b));
    assert!(text.starts_with("# seed=11\n"));
    let rows = data_rows(&text);
    assert_eq!(rows.iter().filter(|r| r[0] == "45").count(), 65);
    assert_eq!(rows.iter().filter(|r| r[0] == "1").count(), 5 + (60.0 * (std::f64::consts::PI / 90.0).sin()).round() as usize);
}

#[test]
fn traffic_rejects_zero_spread() {
    let out = qsc(&["traffic", "--std", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "lamda = 0.5\n").unwrap();
    let out = qsc(&["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda"));
}

#[test]
fn bad_flag_exits_with_config_code() {
    assert_eq!(qsc(&["simulate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(qsc(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "dims = [3, 10]\nmaster_seed = 3\n\n[traffic]\nrounds = 12\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = qsc(&["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resources = read(&out_dir.join("resources.csv"));
    assert!(resources.starts_with("# seed=3\n"));
    let rows = data_rows(&resources);
    assert_eq!(rows.len(), 24);
    for r in &rows {
        let (x, k): (usize, usize) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!(k <= x);
    }

    let json_path = dir.path().join("report.json");
    let out = qsc(&[
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        json_path.to_str().unwrap(),
        "simulate",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&read(&json_path)).unwrap();
    assert_eq!(doc["meta"]["seed"], 3);
    assert_eq!(doc["rounds"].as_array().unwrap().len(), 24);
}
