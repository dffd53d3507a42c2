use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dpsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsynth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Fixture dataset plus a small config file; returns the config path.
fn setup(dir: &Path, seed: u64) -> String {
    let data = dir.join("data.csv");
    let o = dpsynth(&["make-fixture", "--out", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let config = dir.join("config.json");
    let json = config_json(&data, seed);
    fs::write(&config, json).unwrap();
    config.to_str().unwrap().to_string()
}

fn config_json(data: &Path, seed: u64) -> String {
    format!(
        r#"{{"dataset_path": {:?}, "n_train": 800, "n_test": 400, "models": ["mnb"],
            "privacy": [{{"epsilon": 1.0, "delta": 0.0, "mechanism": "laplace"}}], "seed": {seed}}}"#,
        data.to_str().unwrap()
    )
}

#[test]
fn generate_evaluate_audit_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 42);
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();

    let g = dpsynth(&["generate", "--config", &config, "--out", out_s]);
    assert!(g.status.success(), "{}", stderr(&g));
    let synthetic = out.join("synthetic_eps1.jsonl");
    assert!(synthetic.exists(), "{}", stdout(&g));
    let syn = synthetic.to_str().unwrap();

    let e = dpsynth(&[
        "evaluate",
        "--config",
        &config,
        "--out",
        out_s,
        "--synthetic",
        syn,
    ]);
    assert!(e.status.success(), "{}", stderr(&e));
    assert!(stdout(&e).contains("| Model | Original data | Synthetic data |"));
    assert!(stdout(&e).contains("| MNB |"));

    let a = dpsynth(&[
        "audit",
        "--config",
        &config,
        "--out",
        out_s,
        "--synthetic",
        syn,
    ]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(stdout(&a).contains("AUC"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let seeded_7 = setup(tmp.path(), 7);
    let seeded_1 = tmp.path().join("seed1.json");
    let data = tmp.path().join("data.csv");
    fs::write(&seeded_1, config_json(&data, 1)).unwrap();

    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = dpsynth(&[
        "generate",
        "--config",
        &seeded_7,
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = dpsynth(&[
        "generate",
        "--config",
        seeded_1.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(a.join("synthetic_eps1.jsonl")).unwrap(),
        fs::read(b.join("synthetic_eps1.jsonl")).unwrap()
    );
}

#[test]
fn epsilon_zero_reports_floor() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 42);
    let out = tmp.path().join("run");
    let o = dpsynth(&[
        "generate",
        "--config",
        &config,
        "--epsilon",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("ε=0.05"), "{}", stdout(&o));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn missing_dataset_names_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = dpsynth(&[
        "generate",
        "--dataset",
        tmp.path().join("absent.csv").to_str().unwrap(),
        "--epsilon",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("load dataset"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn single_epsilon_sweep_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 42);
    let o = dpsynth(&["sweep", "--config", &config, "--epsilon", "1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sweep"), "{}", stderr(&o));
}

#[test]
fn bad_config_and_bad_flags_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("typo.json");
    fs::write(&config, r#"{"n_trian": 5}"#).unwrap();
    let o = dpsynth(&["generate", "--config", config.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("config"), "{}", stderr(&o));

    let o = dpsynth(&["generate", "--mechanism", "exponential"]);
    assert!(!o.status.success());

    let data = setup(tmp.path(), 1);
    let o = dpsynth(&[
        "generate",
        "--config",
        &data,
        "--mechanism",
        "gaussian",
        "--delta",
        "0",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("config"), "{}", stderr(&o));
}

#[test]
fn http_without_key_fails_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let config = setup(tmp.path(), 42);
    let cfg_text = fs::read_to_string(&config).unwrap().replacen(
        "{",
        r#"{"backend": {"kind": "http", "auth_env_var": "DPSYNTH_TEST_ABSENT_KEY", "endpoint_url": "http://127.0.0.1:9/v1"},"#,
        1,
    );
    fs::write(&config, cfg_text).unwrap();
    let out = tmp.path().join("run");
    let o = Command::new(env!("CARGO_BIN_EXE_dpsynth"))
        .args([
            "generate",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ])
        .env_remove("DPSYNTH_TEST_ABSENT_KEY")
        .env("DPSYNTH_CACHE_DIR", tmp.path().join("cache"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(
        stderr(&o).contains("DPSYNTH_TEST_ABSENT_KEY"),
        "{}",
        stderr(&o)
    );
    assert!(!out.exists());
}
