use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn ecd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecd")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect()).collect()
}

#[test]
fn identical_channels_have_zero_norm() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cert.json");
    let cfg = write(
        &dir,
        "norm.json",
        &json!({"channels": [{"family": "identity"}, {"family": "identity"}], "parameters": {"energy": 1.0}, "truncation_dim": 4}),
    );
    let o = ecd(&["norm", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cert: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(cert["norm_upper"].as_f64().unwrap(), 0.0);
    assert_eq!(cert["status"], "optimal");
}

#[test]
fn bundled_attenuator_recipe() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cert.json");
    let o = ecd(&[
        "norm",
        "--config",
        configs().join("norm-attenuator-pair.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cert: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let (lo, hi) = (cert["norm_lower"].as_f64().unwrap(), cert["norm_upper"].as_f64().unwrap());
    let formula = 2.0 * (1.0 - (-0.72f64).exp()).sqrt();
    assert!(lo >= formula && hi <= 2.0, "[{lo}, {hi}]");
    assert!(cert["gap"].as_f64().unwrap() <= 1e-6);
    assert!(cert["primal_value"].is_number() && cert["dual_value"].is_number());
    assert!(cert["probe_marginal"].is_array());
}

#[test]
fn spec_files_and_emitted_problem_agree() {
    let dir = TempDir::new().unwrap();
    let problem = dir.path().join("problem.json");
    let first = dir.path().join("a.json");
    let cfg = configs().join("norm-spec-files.json");
    let o = ecd(&[
        "norm",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
        "--emit-problem",
        problem.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let second = dir.path().join("b.json");
    let cfg2 = write(&dir, "from-problem.json", &json!({"problem_ref": "problem.json"}));
    let o = ecd(&["norm", "--config", cfg2.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a: Value = serde_json::from_str(&std::fs::read_to_string(first).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&std::fs::read_to_string(second).unwrap()).unwrap();
    assert_eq!(a["norm_upper"], b["norm_upper"]);
}

#[test]
fn malformed_spec_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"dim_in\": 2, \"kraus\": 3}").unwrap();
    let cfg = write(&dir, "norm.json", &json!({"channel_refs": ["bad.json", "bad.json"], "parameters": {"energy": 1}}));
    let o = ecd(&["norm", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let unknown = write(&dir, "u.json", &json!({"experiment": "nope"}));
    assert_eq!(code(&ecd(&["experiment", "--config", unknown.to_str().unwrap()])), 2);
    let small = write(&dir, "s.json", &json!({"experiment": "speed-limit", "truncation_dim": 1}));
    assert_eq!(code(&ecd(&["experiment", "--config", small.to_str().unwrap()])), 2);
    let missing = write(&dir, "m.json", &json!({"channel_refs": ["nowhere.json"]}));
    assert_eq!(code(&ecd(&["norm", "--config", missing.to_str().unwrap()])), 2);
    let empty = write(&dir, "e.json", &json!({"experiment": "witness-scan", "parameters": {"t": []}}));
    assert_eq!(code(&ecd(&["experiment", "--config", empty.to_str().unwrap()])), 2);
    let ok = configs().join("speed-limit-qubit.json");
    assert_eq!(code(&ecd(&["experiment", "--config", ok.to_str().unwrap(), "--gap-tol", "-1"])), 2);
}

#[test]
fn iteration_cap_reports_non_optimal() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cert.json");
    let o = ecd(&[
        "norm",
        "--config",
        configs().join("norm-spec-files.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--max-iter",
        "1",
    ]);
    assert_eq!(code(&o), 3);
    let cert: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(cert["norm_lower"].as_f64().unwrap() <= cert["norm_upper"].as_f64().unwrap());
}

#[test]
fn validate_bundled_and_broken_specs() {
    let o = ecd(&["validate", configs().join("specs/attenuator-0.9-d8.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["valid"], true);

    let dir = TempDir::new().unwrap();
    let incomplete = write(
        &dir,
        "incomplete.json",
        &json!({"dim_in": 2, "dim_out": 2, "kraus": [[[1, 0], [0, 0], [0, 0], [0.9, 0]]]}),
    );
    let o = ecd(&["validate", incomplete.to_str().unwrap()]);
    assert_ne!(code(&o), 0);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["valid"], false);
    assert!((report["completeness_residual"].as_f64().unwrap() - 0.19).abs() < 1e-12);

    let mut spec: Value =
        serde_json::from_str(&std::fs::read_to_string(configs().join("specs/attenuator-0.9-d8.json")).unwrap())
            .unwrap();
    spec["energy_limit"] = json!({"alpha": 0.5, "e0": 0.0});
    let overclaimed = write(&dir, "overclaimed.json", &spec);
    let o = ecd(&["validate", overclaimed.to_str().unwrap()]);
    assert_ne!(code(&o), 0);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["energy_limit_margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn attenuator_sweep_is_monotone() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "sweep.json",
        &json!({"experiment": "attenuator-sweep", "parameters": {"eta1": 0.9, "eta2": 0.6, "energy": [1, 2, 4, 8]},
                "truncation_dim": 24, "output": "sweep.csv"}),
    );
    let o = ecd(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 4);
    let values: Vec<f64> = rows.iter().map(|r| r["measured_lower"].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
    for r in &rows {
        assert!(!r["measured_upper"].is_empty());
        assert_eq!(r["dim"], "24");
    }
    assert!(dir.path().join("sweep.jsonl").is_file());
}

#[test]
fn speed_limit_rows_are_satisfied_and_reruns_are_identical() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = configs().join("speed-limit-oscillator.json");
    for out in [&a, &b] {
        let o = ecd(&["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rows = read_csv(&a);
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r["satisfied"] == "true"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(a.with_extension("jsonl")).unwrap(), std::fs::read(b.with_extension("jsonl")).unwrap());
}

#[test]
fn witness_scan_finds_witnesses() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("w.csv");
    let o = ecd(&[
        "experiment",
        "--config",
        configs().join("witness-scan.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let rows = read_csv(&out);
    let hits = rows.iter().filter(|r| r["in_hull"] == "1").count();
    assert!(hits > 0 && hits < rows.len());
}

#[test]
fn entropy_experiment_with_seed_override() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "entropy.json",
        &json!({"experiment": "entropy-bound", "hamiltonian": [0, 1], "parameters": {"trials": 10, "energy": 0.4}}),
    );
    let out = dir.path().join("e.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_ecd"))
        .args(["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9"])
        .env("ECD_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wrote"));
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r["satisfied"] == "true"));
}
