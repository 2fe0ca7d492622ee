use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aerial-market"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn equilibrium_reproduces_unit_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"theta_max": 1, "nu": 0}"#).unwrap();
    let out = run(
        &["equilibrium", "--config", "c.json", "--s-max", "1", "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("o/equilibrium.json"));
    let p1 = v["bertrand"]["profit1"].as_f64().unwrap();
    assert!((p1 - 0.1458).abs() < 5e-5);
    let c = v["cournot"]["profit1"].as_f64().unwrap();
    assert!((c - 0.1111).abs() < 5e-5);
    assert!(dir.path().join("o/equilibrium.txt").exists());
}

#[test]
fn dynamics_starts_from_initial_shares() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["dynamics", "--game", "bertrand", "--horizon", "5", "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success());
    let mut r = csv::Reader::from_path(dir.path().join("o/dynamics_bertrand.csv")).unwrap();
    let h = r.headers().unwrap().clone();
    let first = r.records().next().unwrap().unwrap();
    let col = |n: &str| first[h.iter().position(|x| x == n).unwrap()].parse::<f64>().unwrap();
    assert!((col("x1") - 0.58).abs() < 0.005);
    assert!((col("x2") - 0.29).abs() < 0.005);
    assert_eq!(col("y0"), 0.0);
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for o in ["a", "b"] {
        let out = run(
            &[
                "abm",
                "--game",
                "cournot",
                "--seeds",
                "2",
                "--horizon",
                "10",
                "--out",
                o,
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    for f in ["abm_cournot_seed1.csv", "abm_cournot_seed2.csv", "abm_cournot_mean.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn noiseless_validation_passes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"population": 500, "behavior": {"xi": 1, "gamma": 0, "alpha_c": 0, "delta": 0, "c_u": 0.1, "c_price": 0.1}}"#,
    )
    .unwrap();
    let out = run(
        &[
            "validate",
            "--config",
            "c.json",
            "--seeds",
            "2",
            "--horizon",
            "10",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let v = json(&dir.path().join("o/validate_bertrand.json"));
    assert_eq!(v["max_share"].as_f64().unwrap(), 0.0);
    assert_eq!(v["pass"], true);
}

#[test]
fn failed_validation_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"population": 300}"#).unwrap();
    let out = run(
        &[
            "validate",
            "--config",
            "c.json",
            "--seeds",
            "1",
            "--horizon",
            "20",
            "--tolerance",
            "0",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("typo.json"), r#"{"thetamax": 3}"#).unwrap();
    fs::write(dir.path().join("nu.json"), r#"{"theta_max": 1, "nu": 2}"#).unwrap();
    fs::write(dir.path().join("mu.json"), r#"{"device_density": 5}"#).unwrap();
    for f in ["typo.json", "nu.json", "mu.json", "missing.json"] {
        let out = run(&["dynamics", "--config", f, "--out", "o"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{f}");
    }
    let out = bin()
        .args(["dynamics", "--out", "o"])
        .env("SIM_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coop_emits_shapley_split() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["coop", "--horizon", "30", "--out", "o"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let f = |k: &str| v[k].as_f64().unwrap();
    assert!((f("phi1") + f("phi2") - f("v12")).abs() < 1e-9);
    assert_eq!(json(&dir.path().join("o/shapley_bertrand.json")), v);
    assert!(dir.path().join("o/coop_bertrand_cooperative.csv").exists());
}

#[test]
fn columns_selects_named_series() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "t,y0,y1\n0,0.1,0.2\n1,0.3,0.4\n").unwrap();
    let out = run(&["columns", "a.csv", "--columns", "t,y1"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "# t y1\n0 0.2\n1 0.4\n");
    let out = run(&["columns", "a.csv", "--columns", "nope"], dir.path());
    assert!(!out.status.success());
}
