use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{validate, ExperimentConfig};
use crate::registry::{lookup, ExperimentOutput};
use crate::CliError;

pub const PARTIAL_MARKER: &str = "PARTIAL";

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(e) = &self.experiment {
            cfg.experiment.name = e.clone();
        }
        if let Some(s) = self.seed {
            cfg.ensemble.master_seed = s;
        }
        if let Some(k) = self.samples {
            cfg.ensemble.n_samples = k;
        }
        if let Some(o) = &self.out {
            cfg.output.directory = o.clone();
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub label: String,
    pub slope: f64,
    pub ci: (f64, f64),
    pub target: f64,
    pub criterion: homoglab::stats::SlopeCriterion,
    pub pass: bool,
    pub target_in_ci: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub checks: Vec<CheckSummary>,
    pub extra: Value,
}

#[derive(Debug, Clone, Serialize)]
struct ManifestEntry {
    file: String,
    sha256: String,
    bytes: usize,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Writer {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl Writer {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }
}

fn summarize(name: &str, out: &ExperimentOutput) -> RunSummary {
    RunSummary {
        experiment: name.to_string(),
        checks: out
            .checks
            .iter()
            .map(|c| CheckSummary {
                label: c.label.clone(),
                slope: c.fit.slope,
                ci: c.fit.ci,
                target: c.criterion.target(),
                criterion: c.criterion,
                pass: c.pass,
                target_in_ci: c.target_in_ci,
            })
            .collect(),
        extra: out.extra.clone(),
    }
}

/// Validates, runs and persists one experiment. Artifacts land in the
/// output directory; a `PARTIAL` marker is left behind if the run fails.
pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunSummary, CliError> {
    let report = validate(cfg);
    if let Some(first) = report.violations.first() {
        let message = match report.violations.as_slice() {
            [only] => only.message.clone(),
            all => all
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        };
        return Err(CliError::ConfigInvalid {
            path: first.path.clone(),
            message,
        });
    }
    let exp = lookup(&cfg.experiment.name).expect("validated experiment name");
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir)?;
    let marker = dir.join(PARTIAL_MARKER);
    fs::write(&marker, format!("run of `{}` in progress\n", exp.name()))?;
    match exp.run(cfg, threads) {
        Ok(out) => {
            let summary = persist(cfg, dir, &out)?;
            fs::remove_file(&marker)?;
            Ok(summary)
        }
        Err(e) => {
            fs::write(&marker, format!("run of `{}` failed: {e}\n", exp.name()))?;
            Err(CliError::Run(e))
        }
    }
}

fn persist(
    cfg: &ExperimentConfig,
    dir: &Path,
    out: &ExperimentOutput,
) -> Result<RunSummary, CliError> {
    let mut w = Writer {
        dir: dir.to_path_buf(),
        files: Vec::new(),
    };
    let config_json = cfg.to_json();
    w.write("config.json", config_json.as_bytes())?;
    let formats = &cfg.output.formats;
    for t in &out.tables {
        if formats.iter().any(|f| f == "csv") {
            w.write(&format!("{}.csv", t.file_stem()), t.to_csv().as_bytes())?;
        }
        if formats.iter().any(|f| f == "json") {
            w.write(
                &format!("{}.json", t.file_stem()),
                serde_json::to_string_pretty(t)?.as_bytes(),
            )?;
        }
    }
    let summary = summarize(&cfg.experiment.name, out);
    w.write(
        "summary.json",
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    let manifest = json!({
        "experiment": cfg.experiment.name,
        "config_sha256": sha256_hex(config_json.as_bytes()),
        "seeds": {
            "master_seed": cfg.ensemble.master_seed,
            "sample_indices": format!("0..{}", cfg.ensemble.n_samples),
        },
        "versions": {
            "homoglab": homoglab::VERSION,
            "homoglab-cli": env!("CARGO_PKG_VERSION"),
            "schemas": out.tables.iter().map(|t| format!("{}@{}", t.schema, t.version)).collect::<Vec<_>>(),
        },
        "files": w.files,
    });
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(summary)
}
