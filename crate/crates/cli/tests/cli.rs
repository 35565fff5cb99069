use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qconf"))
        .args(args)
        .env("QCONF_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn stats_bound_worked_example() {
    let o = qconf(&["stats-bound", "--trials", "1000", "--alpha", "0.1", "--ncal", "9", "--eps", "0.03"]);
    assert!(o.status.success());
    let p: f64 = stdout(&o).trim().parse().unwrap();
    assert!(p > 0.999, "{p}");
}

#[test]
fn gen_bound_value() {
    let o = qconf(&["gen-bound", "--gates", "1", "--ntrain", "100", "--delta", "0.1"]);
    assert!(o.status.success());
    let b: f64 = stdout(&o).trim().parse().unwrap();
    // bound(1, 1, 0.1, 1) / √100
    assert!((b - 71.190_501_834_539_2).abs() < 1e-9, "{b}");
}

#[test]
fn experiment_artifacts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "d.json",
        r#"{"task": "density", "alpha": 0.1, "n_qubits": 3, "trials": 30, "shots_sweep": [20, 50],
            "train": {"epochs": 10}}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = qconf(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv_a = fs::read(a.join("results.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("results.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,method,covered,mass,size,quantile,m_shots"));
    assert_eq!(lines.count(), 30 * 5);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["report"]["methods"].as_array().unwrap().len(), 5);
    let resolved = fs::read_to_string(a.join("resolved_config.json")).unwrap();
    assert!(resolved.contains("\"seed\": 7"));

    let plot = fs::read_to_string(a.join("plot_coverage_qcp.dat")).unwrap();
    let rows: Vec<&str> = plot.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("20 "));
    assert!(a.join("plot_size_oracle.dat").exists());

    // the resolved config reproduces the run
    let again = dir.path().join("c");
    let o = qconf(&[
        "experiment",
        "--config",
        a.join("resolved_config.json").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(again.join("results.csv")).unwrap(), text.as_bytes());
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"task": "density", "alpha": 1.5}"#);
    let o = qconf(&["experiment", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));

    let cfg = write_config(dir.path(), "unknown.json", r#"{"task": "density", "shots": 10}"#);
    let o = qconf(&["experiment", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("shots"));

    let cfg = write_config(dir.path(), "ok.json", r#"{"task": "density"}"#);
    let o = qconf(&["experiment", "--config", &cfg, "--out", "/dev/null/x", "--method", "pcp,warp"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_file_exits_2() {
    let o = qconf(&["experiment", "--config", "/nonexistent/cfg.json", "--out", "/tmp/unused"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_calibrate_predict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.json",
        r#"{"task": "regression", "n_qubits": 2, "n_layers": 2, "encoder": "linear",
            "dataset_size": 30, "m_shots": 40, "train": {"epochs": 15}}"#,
    );
    let out = dir.path().to_str().unwrap();
    let o = qconf(&["train", "--config", &cfg, "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let model = dir.path().join("model.json");
    assert!(model.exists());

    let o = qconf(&["calibrate", "--config", &cfg, "--model", model.to_str().unwrap(), "--out", out, "--method", "qcp"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cal: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("calibration.json")).unwrap()).unwrap();
    assert_eq!(cal["k"], 7);
    assert_eq!(cal["scores"].as_array().unwrap().len(), 10);

    let o = qconf(&[
        "predict",
        "--config",
        &cfg,
        "--model",
        model.to_str().unwrap(),
        "--calibration",
        dir.path().join("calibration.json").to_str().unwrap(),
        "--x",
        "-1.5",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let set: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(set["kind"] == "intervals" || set["kind"] == "whole_space");
    let pred: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("prediction.json")).unwrap()).unwrap();
    assert_eq!(pred["shots"].as_array().unwrap().len(), 40);

    // regression without x is a usage error
    let o = qconf(&[
        "predict",
        "--config",
        &cfg,
        "--model",
        model.to_str().unwrap(),
        "--calibration",
        dir.path().join("calibration.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn quantum_classify_calibrate_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.json",
        r#"{"task": "quantum-classify", "m_shots": 30, "quantum": {"n_classes": 3, "dim": 4}}"#,
    );
    let out = dir.path().to_str().unwrap();
    let o = qconf(&["calibrate", "--config", &cfg, "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = qconf(&[
        "predict",
        "--config",
        &cfg,
        "--calibration",
        dir.path().join("calibration.json").to_str().unwrap(),
        "--label",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let set: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(set["kind"], "labels");
}
