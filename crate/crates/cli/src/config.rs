use std::path::{Path, PathBuf};

use homoglab::corrector::SolverConfig;
use homoglab::gaussian_field::{spectral_density, CoefficientMapSpec, CovarianceSpec};
use homoglab::lattice::PeriodicGrid;
use homoglab::stats::EnsembleSpec;
use serde::{Deserialize, Serialize};

use crate::registry::{experiment_names, lookup};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
}

/// Parameter ladders shared by the experiments; each experiment reads the
/// ones it needs and fills the rest with defaults derived from the grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<LevelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_time: Option<f64>,
    /// Macroscopic wavenumber of the two-scale right-hand side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<usize>,
    /// Moving-average width for the two-scale expansion; `0` disables it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
    /// Extra halvings of the time grid for the small-contrast oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinements: Option<usize>,
}

/// Richardson ladder: masses `base_t 2^k`, `k = 0..=depth`, and orders
/// `1..=orders`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub base_t: f64,
    pub depth: usize,
    pub orders: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default)]
    pub parameters: ExperimentParameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into()]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("homoglab-out"),
            formats: default_formats(),
        }
    }
}

pub const FORMATS: [&str; 2] = ["csv", "json"];

/// One experiment invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub covariance: CovarianceSpec,
    pub coefficient: CoefficientMapSpec,
    pub ensemble: EnsembleSpec,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Small two-dimensional defaults for `name`.
    pub fn template(name: &str) -> Self {
        Self {
            grid: GridConfig { d: 2, n: 64 },
            covariance: CovarianceSpec {
                beta: 4.0,
                components: 1,
            },
            coefficient: CoefficientMapSpec::logistic(0.5, 1.0),
            ensemble: EnsembleSpec {
                n_samples: 16,
                master_seed: 1,
            },
            experiment: ExperimentSection {
                name: name.to_string(),
                parameters: ExperimentParameters::default(),
            },
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid {
            path: "<document>".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigInvalid {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<PeriodicGrid, homoglab::Error> {
        PeriodicGrid::new(self.grid.d, self.grid.n)
    }

    pub fn params(&self) -> &ExperimentParameters {
        &self.experiment.parameters
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeClass {
    Seconds,
    Minutes,
    TensOfMinutes,
    Hours,
}

impl RuntimeClass {
    pub fn from_seconds(s: f64) -> Self {
        if s < 10.0 {
            RuntimeClass::Seconds
        } else if s < 600.0 {
            RuntimeClass::Minutes
        } else if s < 3600.0 {
            RuntimeClass::TensOfMinutes
        } else {
            RuntimeClass::Hours
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Peak resident estimate for one worker, in bytes.
    pub memory_bytes: Option<u64>,
    /// Single-worker estimate.
    pub estimated_seconds: Option<f64>,
    pub runtime_class: Option<RuntimeClass>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Dry run: every guard is checked without sampling any field.
pub fn validate(cfg: &ExperimentConfig) -> ValidationReport {
    let mut v = Vec::new();
    let grid = match cfg.grid() {
        Ok(g) => Some(g),
        Err(e) => {
            let path = if !(1..=3).contains(&cfg.grid.d) {
                "grid.d"
            } else {
                "grid.n"
            };
            v.push(Violation::new(path, e.to_string()));
            None
        }
    };
    if let Err(e) = cfg.covariance.validate() {
        let path = match &e {
            homoglab::Error::InvalidParameter { name, .. } => format!("covariance.{name}"),
            _ => "covariance".into(),
        };
        let message = match e {
            homoglab::Error::InvalidParameter { reason, .. } => reason,
            other => other.to_string(),
        };
        v.push(Violation::new(path, message));
    } else if let Some(g) = &grid {
        if g.len() <= 1 << 22 {
            if let Err(e) = spectral_density(&cfg.covariance, g) {
                v.push(Violation::new("covariance.beta", e.to_string()));
            }
        }
    }
    if let Err(e) = cfg.coefficient.build() {
        let path = match &e {
            homoglab::Error::InvalidParameter { name, .. } if *name == "lambda" => {
                "coefficient.lambda".to_string()
            }
            homoglab::Error::InvalidParameter { name, .. } => format!("coefficient.params.{name}"),
            homoglab::Error::UnknownStrategy { .. } => "coefficient.kind".into(),
            _ => "coefficient".into(),
        };
        v.push(Violation::new(path, e.to_string()));
    }
    if let Err(e) = cfg.ensemble.validate() {
        v.push(Violation::new("ensemble.n_samples", e.to_string()));
    }
    if let Err(e) = cfg.solver.validate() {
        v.push(Violation::new("solver", e.to_string()));
    }
    for f in &cfg.output.formats {
        if !FORMATS.contains(&f.as_str()) {
            v.push(Violation::new(
                "output.formats",
                format!("unknown format `{f}`"),
            ));
        }
    }
    let mut memory_bytes = None;
    let mut estimated_seconds = None;
    match lookup(&cfg.experiment.name) {
        None => v.push(Violation::new(
            "experiment.name",
            format!(
                "unknown experiment `{}`; expected one of {}",
                cfg.experiment.name,
                experiment_names().collect::<Vec<_>>().join(", ")
            ),
        )),
        Some(exp) => {
            if let Some(g) = &grid {
                v.extend(exp.check(cfg, g));
                let cost = exp.cost(cfg, g);
                memory_bytes = Some(cost.fields as u64 * g.len() as u64 * 8);
                estimated_seconds = Some(cost.seconds_per_sample * cfg.ensemble.n_samples as f64);
            }
        }
    }
    ValidationReport {
        violations: v,
        memory_bytes,
        runtime_class: estimated_seconds.map(RuntimeClass::from_seconds),
        estimated_seconds,
    }
}
