//! End-to-end tests of the `taso` binary.

use std::path::Path;
use std::process::{Command, Output};

use taso_core::harness::{ExperimentConfig, GRID_CSV_HEADER, RUN_CSV_HEADER};

fn taso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taso"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn schedule_curve_tabulates_the_default_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let run = taso(&[
        "schedule-curve",
        "--lr",
        "0.05",
        "--epochs",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epoch,lr"));
    assert_eq!(text.lines().count(), 101);
    let row70 = text.lines().nth(70).unwrap();
    assert_eq!(row70, "70,0.0275");
}

#[test]
fn schedule_curve_warns_on_degenerate_shape_but_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("degenerate.csv");
    let run = taso(&[
        "schedule-curve",
        "--lr",
        "1.0",
        "--alpha",
        "10",
        "--beta",
        "0.3",
        "--epochs",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    assert!(stderr(&run).contains("degenerate"), "{}", stderr(&run));
    assert!(out.exists());
}

#[test]
fn defaults_prints_a_parseable_config() {
    let run = taso(&["defaults", "--optimizer", "taso"]);
    assert!(run.status.success(), "{}", stderr(&run));
    let cfg = ExperimentConfig::from_json(&stdout(&run)).unwrap();
    assert_eq!(cfg.optimizer.name, "momentum");
    assert_eq!(cfg.optimizer.mu, Some(0.9));
    assert_eq!(cfg.epochs, 100);
    assert_eq!(cfg.seeds.len(), 5);

    let adam = taso(&["defaults", "--optimizer", "adam"]);
    let cfg = ExperimentConfig::from_json(&stdout(&adam)).unwrap();
    assert_eq!(cfg.optimizer.name, "amsgrad");

    let unknown = taso(&["defaults", "--optimizer", "lion"]);
    assert!(!unknown.status.success());
    assert!(stderr(&unknown).contains("lion"));
}

#[test]
fn train_runs_a_config_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.json");
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    std::fs::write(
        &cfg_path,
        r#"{
  "model": {"kind": "mlp", "widths": [2, 8, 2]},
  "dataset": {"kind": "blobs", "n": 300},
  "optimizer": {"name": "momentum", "mu": 0.9},
  "schedule": {"kind": "taso", "lr_initial": 0.5},
  "epochs": 5,
  "batch_size": 32,
  "seeds": [1, 2],
  "out": "placeholder"
}"#,
    )
    .unwrap();

    let first = taso(&[
        "train",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("mean test acc"));

    let second = taso(&[
        "train",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
        "--sequential",
    ]);
    assert!(second.status.success(), "{}", stderr(&second));

    for seed in [1, 2] {
        let a = std::fs::read(out_a.join(format!("run-seed-{seed}.csv"))).unwrap();
        let b = std::fs::read(out_b.join(format!("run-seed-{seed}.csv"))).unwrap();
        assert_eq!(a, b, "seed {seed} runs must be byte-identical");
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(RUN_CSV_HEADER));
        assert_eq!(text.lines().count(), 6);
    }
    assert!(out_a.join("aggregate.json").exists());
    assert!(out_a.join("config.json").exists());
}

#[test]
fn train_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(
        &cfg_path,
        r#"{
  "model": {"kind": "mlp", "widths": [2, 8, 2]},
  "dataset": {"kind": "blobs", "n": 300},
  "optimizer": {"name": "sgd"},
  "schedule": {"kind": "constant", "lr": 0.1},
  "epochs": 5,
  "batch_size": 32,
  "seeds": [1],
  "out": "x",
  "verbose": true
}"#,
    )
    .unwrap();
    let run = taso(&["train", "--config", cfg_path.to_str().unwrap()]);
    assert!(!run.status.success());
    assert!(stderr(&run).contains("verbose"), "{}", stderr(&run));
}

#[test]
fn grid_emits_the_declared_cells() {
    let dir = tempfile::tempdir().unwrap();
    let run = taso(&[
        "grid",
        "--optimizer",
        "adagrad",
        "--dataset",
        "blobs",
        "--samples",
        "200",
        "--epochs",
        "2",
        "--seeds",
        "2",
        "--batch-size",
        "32",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(GRID_CSV_HEADER));
    let labels: Vec<String> = lines
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(
        labels,
        vec!["lr=0.1", "lr=0.05", "lr=0.01", "lr=0.0075", "lr=0.005"]
    );
    // run seeds are base-seed + index (default base 1)
    assert!(Path::new(dir.path())
        .join("cell-00-lr=0.1")
        .join("run-seed-1.csv")
        .exists());
    assert!(Path::new(dir.path())
        .join("cell-00-lr=0.1")
        .join("run-seed-2.csv")
        .exists());
}

#[test]
fn grid_rejects_unknown_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let run = taso(&[
        "grid",
        "--optimizer",
        "lion",
        "--epochs",
        "1",
        "--seeds",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!run.status.success());
}
