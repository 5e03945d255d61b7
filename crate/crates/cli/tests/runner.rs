use std::fs;
use std::path::Path;
use std::process::Command;

use physnet::io::{self, Table};
use physnet::nn::SingleLayerNet;
use physnet_cli::config::VariantSelection;
use physnet_cli::experiment::{RunStatus, SUMMARY_FILE};
use physnet_cli::{run_experiment, ExperimentConfig, ExperimentReport};

fn quick_config(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.output.dir = dir.to_path_buf();
    cfg.train.iterations = 60;
    cfg.correspondence.n_samples = 5000;
    cfg.seed = 11;
    cfg
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_physnet"))
}

#[test]
fn constrained_with_zero_iterations_has_only_initial_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.variant = VariantSelection::Constrained;
    cfg.train.iterations = 0;
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.variants.len(), 1);
    let v = report.variant("constrained").unwrap();
    let trace = io::read_trace(&dir.path().join(v.trace.as_ref().unwrap())).unwrap();
    assert_eq!(trace.records.len(), 1);
    assert_eq!(trace.records[0].iteration, 0);
    assert_eq!(trace.records[0].physics_loss, 0.0);
}

#[test]
fn every_referenced_file_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&quick_config(dir.path())).unwrap();
    assert_eq!(ExperimentReport::load(dir.path()).unwrap(), report);
    for name in report.files() {
        let path = dir.path().join(name);
        assert!(path.exists(), "{name} missing");
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => {
                Table::read_path(&path).unwrap();
            }
            Some("json") => {
                io::read_json::<SingleLayerNet>(&path).unwrap();
            }
            Some("toml") => {
                ExperimentConfig::load(&path).unwrap();
            }
            Some("svg") => assert!(fs::read_to_string(&path).unwrap().contains("</svg>")),
            other => panic!("unexpected artifact type {other:?}"),
        }
    }
}

#[test]
fn solution_csv_matches_checkpoint_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&quick_config(dir.path())).unwrap();
    for v in &report.variants {
        let net: SingleLayerNet = io::read_json(&dir.path().join(v.checkpoint.as_ref().unwrap())).unwrap();
        let table = Table::read_path(&dir.path().join(v.solution.as_ref().unwrap())).unwrap();
        let xs = table.column("x").unwrap();
        let fs = table.column("f").unwrap();
        assert_eq!(xs.len(), 400);
        for (x, f) in xs.iter().zip(&fs) {
            assert_eq!(net.forward(*x).to_bits(), f.to_bits());
        }
    }
}

#[test]
fn convergence_panel_has_one_curve_per_variant() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&quick_config(dir.path())).unwrap();
    let svg = fs::read_to_string(dir.path().join("convergence.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert_eq!(svg.matches("class=\"legend-entry\"").count(), 3);
    for color in ["#1f77b4", "#2ca02c", "#d62728"] {
        assert!(svg.contains(color));
    }
    assert!(!svg.contains("href"));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let report = run_experiment(&quick_config(first.path())).unwrap();
    let mut echoed = ExperimentConfig::load(&first.path().join("config.toml")).unwrap();
    echoed.output.dir = second.path().to_path_buf();
    run_experiment(&echoed).unwrap();
    for name in report.files().into_iter().filter(|n| n.ends_with(".csv")) {
        assert_eq!(fs::read(first.path().join(name)).unwrap(), fs::read(second.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn divergence_is_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.train.optimizer = physnet_cli::config::OptimizerKind::Sgd;
    cfg.train.lr = 1e6;
    let report = run_experiment(&cfg).unwrap();
    assert!(report.variants.iter().any(|v| v.status == RunStatus::Diverged));
    for v in &report.variants {
        if v.status == RunStatus::Diverged {
            assert!(v.diverged_at.is_some());
            assert!(v.trace.is_none());
        }
    }
    assert!(dir.path().join(SUMMARY_FILE).exists());
}

#[test]
fn binary_run_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.toml");
    fs::write(&cfg_path, "[correspondence]\nn_samples = 2000\n").unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--iterations", "5", "--seed", "3", "--variant", "informed", "--lambda", "0.5", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let echoed = ExperimentConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(echoed.seed, 3);
    assert_eq!(echoed.train.iterations, 5);
    assert_eq!(echoed.train.lambda, 0.5);
    assert_eq!(echoed.correspondence.n_samples, 2000);
    let trace = io::read_trace(&out.join("trace_informed.csv")).unwrap();
    assert_eq!(trace.records.len(), 6);
}

#[test]
fn binary_errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.toml");
    fs::write(&cfg_path, "[train]\niteratons = 5\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(!out.status.success());
    let line = String::from_utf8(out.stderr).unwrap();
    let value: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(value["error"]["kind"], "config");

    let out = bin().args(["run", "--omega", "-1", "--out"]).arg(dir.path().join("neg")).output().unwrap();
    assert!(!out.status.success());
    let value: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(value["error"]["kind"], "invalid_argument");
}

#[test]
fn verification_subcommands_report_json() {
    let parse = |args: &[&str]| -> serde_json::Value {
        let out = bin().args(args).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let v = parse(&["check-correspondence", "--transformed", "--n-samples", "1000"]);
    assert_eq!(v["max_abs_error"], 0.0);
    let v = parse(&["boogaart"]);
    assert!(v["residual"].as_f64().unwrap() < 1e-9);
    let v = parse(&["boogaart", "--kernel", "se"]);
    assert!(v["residual"].as_f64().unwrap() > 1e-2);
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gp.csv");
    let v = parse(&["gp-posterior", "--out", csv.to_str().unwrap()]);
    assert_eq!(v["n_query"], 400);
    let table = io::read_posterior(&csv).unwrap();
    assert_eq!(table.rows.len(), 400);
}
