use std::path::Path;
use std::process::{Command, Output};

use homoglab_cli::config::ExperimentConfig;
use homoglab_cli::PARTIAL_MARKER;

fn homoglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homoglab"))
        .args(args)
        .env_remove("HOMOGLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, cfg.to_json()).unwrap();
    p.to_str().unwrap().to_string()
}

fn corrector_config(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::template("corrector");
    cfg.ensemble.n_samples = 4;
    cfg.output.directory = dir.join("out");
    cfg
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn corrector_smoke_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corrector_config(tmp.path());
    let path = write_config(tmp.path(), &cfg);
    let o = homoglab(&["run", "--config", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("out/corrector.csv")).unwrap();
    let lines: Vec<&str> = csv.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines[0], "# homoglab-schema: corrector@1");
    assert!(lines[1].starts_with("sample_index,a_00,a_01,a_10,a_11"));
    assert_eq!(lines.len(), 2 + 4);
    assert!(!tmp.path().join("out").join(PARTIAL_MARKER).exists());
    for f in ["summary.json", "manifest.json", "config.json"] {
        assert!(tmp.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn named_shorthand_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = corrector_config(tmp.path());
    cfg.experiment.name = "birkhoff".into();
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("named");
    let o = homoglab(&[
        "corrector",
        "--config",
        &path,
        "--samples",
        "3",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("corrector.csv")).unwrap();
    assert_eq!(csv.matches("\r\n").count(), 2 + 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"]["master_seed"], 9);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = corrector_config(tmp.path());
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("out");
    let files = [
        "corrector.csv",
        "summary.json",
        "manifest.json",
        "config.json",
    ];
    let mut first = Vec::new();
    for threads in ["1", "2"] {
        let o = homoglab(&["run", "--config", &path, "--threads", threads]);
        assert!(o.status.success(), "{}", stderr(&o));
        let bytes: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        if first.is_empty() {
            first = bytes;
        } else {
            for (f, (x, y)) in files.iter().zip(first.iter().zip(&bytes)) {
                assert_eq!(x, y, "{f}");
            }
        }
    }
}

#[test]
fn radius_at_half_the_side_is_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::template("birkhoff");
    cfg.output.directory = tmp.path().join("out");
    cfg.experiment.parameters.r_ladder = Some(vec![8.0, 16.0, 32.0]);
    let path = write_config(tmp.path(), &cfg);
    let o = homoglab(&["run", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("experiment.parameters.r_ladder"),
        "{}",
        stderr(&o)
    );
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn validate_accepts_template() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), &ExperimentConfig::template("semigroup"));
    let o = homoglab(&["validate", "--config", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
    assert!(report["estimated_seconds"].as_f64().unwrap() > 0.0);
    assert!(report["memory_bytes"].as_u64().unwrap() > 0);
}

#[test]
fn validate_rejects_non_positive_beta() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::template("corrector");
    cfg.covariance.beta = 0.0;
    let path = write_config(tmp.path(), &cfg);
    let o = homoglab(&["validate", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("beta must be positive"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn validate_names_grid_side() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::template("corrector");
    cfg.grid.n = 48;
    let path = write_config(tmp.path(), &cfg);
    let o = homoglab(&["validate", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.n"), "{}", stderr(&o));
}

#[test]
fn unknown_command_fails() {
    let o = homoglab(&["nonsense"]);
    assert!(!o.status.success());
}
