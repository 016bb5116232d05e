use std::process::Command;

fn xpoint() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_xpoint"));
    c.env_remove("XPOINT_OUTPUT_DIR");
    c
}

#[test]
fn run_writes_report_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = xpoint()
        .args(["run", "--preset", "predict", "-o"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "predict");
    assert_eq!(report["schema_version"], 1);
    assert!(report["metrics"]["predictions"].as_array().is_some());
    assert!(dir.path().join("weights.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = xpoint()
        .args(["run", "--preset", "fit-logistic"])
        .env("XPOINT_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn same_seed_same_metrics() {
    let metrics = |seed: &str| {
        let out = xpoint()
            .args(["run", "--preset", "fit-linear", "--set", &format!("seed={seed}"), "--set", "device.sigma_mode=\"dg/2\""])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["metrics"].clone()
    };
    assert_eq!(metrics("7"), metrics("7"));
    assert_ne!(metrics("7"), metrics("8"));
}

#[test]
fn validate_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = xpoint().args(["validate-config", "--preset", "boston"]).output().unwrap();
    assert!(out.status.success());
    let path = dir.path().join("boston.toml");
    std::fs::write(&path, &out.stdout).unwrap();
    let again = xpoint().arg("validate-config").arg(&path).output().unwrap();
    assert!(again.status.success());
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn bad_input_reports_json_error() {
    let out = xpoint()
        .args(["run", "--preset", "boston", "--set", "circuit.wires=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "unknown_parameter");

    let out = xpoint().args(["sweep", "--preset", "transient", "--param", "bogus", "--values", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = xpoint().args(["run", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "file_not_found");
}

#[test]
fn oracle_check_passes() {
    let out = xpoint().args(["oracle-check", "--count", "50"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn sweep_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = xpoint()
        .args(["sweep", "--preset", "transient", "--param", "train_size", "--values", "200,333", "-o"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("summary.csv").exists());
}
