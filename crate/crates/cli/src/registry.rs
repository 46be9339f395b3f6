//! Experiments selectable by name.

use homoglab::corrector::steady_rve;
use homoglab::gaussian_field::{CoefficientModel, SampleSeed};
use homoglab::lattice::PeriodicGrid;
use homoglab::smallcontrast::OracleReport;
use homoglab::stats::convergence::{
    extrapolation_ensemble, oracle_sample, two_scale_ensemble, ExtrapolationPlan, OraclePlan,
    TwoScalePlan,
};
use homoglab::stats::experiments::{
    birkhoff_variance_experiment, check_dyadic, corrector_growth_experiment, decay_report,
    fluctuation_report, flux_diagonal_report, flux_fixed_report, gradient_averages,
    gradient_fluctuation_target, h_fluctuation_report, lag_covariances, semigroup_ensemble,
    SemigroupPlan,
};
use homoglab::stats::{mean_with_stderr, run_ensemble, SlopeCheck, SlopeCriterion};
use homoglab::two_scale::{MacroPotential, TwoScaleOptions};
use homoglab::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, LevelConfig, Violation};
use crate::table::Table;

/// Rough per-sample resource needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost {
    /// Lattice fields alive at once.
    pub fields: usize,
    pub seconds_per_sample: f64,
}

/// Tables, fitted slopes and free-form extras produced by one run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    pub checks: Vec<SlopeCheck>,
    pub extra: Value,
}

pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    /// Guard violations, reported with the offending field path.
    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation>;
    fn cost(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Cost;
    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error>;
}

static REGISTRY: &[&dyn Experiment] = &[
    &FieldCheck,
    &Birkhoff,
    &Corrector,
    &SemigroupDecay,
    &Fluctuations,
    &HFluctuations,
    &Growth,
    &Extrapolate,
    &TwoScale,
    &Oracle,
];

pub fn experiment_names() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|e| e.name())
}

pub fn lookup(name: &str) -> Option<&'static dyn Experiment> {
    REGISTRY.iter().copied().find(|e| e.name() == name)
}

// ---------------------------------------------------------------- helpers

fn path(name: &str) -> String {
    format!("experiment.parameters.{name}")
}

fn violation(name: &str, e: impl std::fmt::Display) -> Violation {
    Violation::new(path(name), e.to_string())
}

fn dyadic(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi * (1.0 + 1e-12) {
        out.push(x);
        x *= 2.0;
    }
    out
}

/// Dyadic ladder from 2 (or 1 on small grids) up to `hi`.
fn default_radii(hi: f64) -> Vec<f64> {
    let from_two = dyadic(2.0, hi);
    if from_two.len() >= 3 {
        from_two
    } else {
        dyadic(1.0, hi)
    }
}

/// Unit solve time, calibrated on a 256^2 steady corrector.
fn unit_solve(grid: &PeriodicGrid) -> f64 {
    let n = grid.len() as f64;
    4.9e-8 * n * n.log2().max(1.0)
}

fn model(cfg: &ExperimentConfig) -> Result<CoefficientModel, Error> {
    CoefficientModel::new(&cfg.grid()?, &cfg.covariance, &cfg.coefficient)
}

fn need_samples(cfg: &ExperimentConfig, min: usize) -> Option<Violation> {
    (cfg.ensemble.n_samples < min).then(|| {
        Violation::new(
            "ensemble.n_samples",
            format!(
                "{} needs at least {min} samples for moment estimates",
                cfg.experiment.name
            ),
        )
    })
}

fn direction(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<usize, Violation> {
    let d = cfg.params().direction.unwrap_or(0);
    if d >= grid.dim() {
        return Err(violation("direction", format!("{d} >= d = {}", grid.dim())));
    }
    Ok(d)
}

fn checks_of(checks: impl IntoIterator<Item = Option<SlopeCheck>>) -> Vec<SlopeCheck> {
    checks.into_iter().flatten().collect()
}

fn seed_cell(s: SampleSeed) -> crate::table::Cell {
    s.sample_index.into()
}

// ------------------------------------------------------------- field-check

struct FieldCheck;

impl FieldCheck {
    fn lags(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<Vec<usize>, Violation> {
        let lags = cfg
            .params()
            .lags
            .clone()
            .unwrap_or_else(|| vec![1, 2, 4, 8]);
        if lags.is_empty() || lags.iter().any(|&l| l == 0 || l > grid.side() / 2) {
            return Err(violation(
                "lags",
                format!("lags must lie in [1, n/2 = {}]", grid.side() / 2),
            ));
        }
        Ok(lags)
    }
}

impl Experiment for FieldCheck {
    fn name(&self) -> &'static str {
        "field-check"
    }

    fn describe(&self) -> &'static str {
        "sampler covariance at axis lags against the clamped target"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        Self::lags(cfg, grid).err().into_iter().collect()
    }

    fn cost(&self, _: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        Cost {
            fields: 4,
            seconds_per_sample: 0.1 * unit_solve(grid),
        }
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let model = model(cfg)?;
        let grid = *model.grid();
        let lags = Self::lags(cfg, &grid).map_err(|v| Error::InvalidParameter {
            name: "lags",
            reason: v.message,
        })?;
        let mut all = vec![0];
        all.extend(&lags);
        let rows = run_ensemble(&cfg.ensemble, threads, |seed| {
            Ok(lag_covariances(&model.gaussian(seed), &all))
        })?;
        let mut table = Table::new("field-check", &["sample_index", "lag", "product_mean"]);
        for (i, r) in rows.iter().enumerate() {
            for (l, v) in all.iter().zip(r) {
                table.push(vec![i.into(), (*l).into(), (*v).into()]);
            }
        }
        let implied = model.density().implied_covariance();
        let mut summary = Table::new(
            "field-check-summary",
            &["lag", "target", "mean", "stderr", "within_3se"],
        );
        let mut verdicts = Vec::new();
        for (k, &l) in all.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let (m, se) = mean_with_stderr(&col);
            let target = implied.values()[l * grid.stride(0)];
            let ok = (m - target).abs() <= 3.0 * se;
            summary.push(vec![
                l.into(),
                target.into(),
                m.into(),
                se.into(),
                (ok as u64).into(),
            ]);
            verdicts.push(json!({"lag": l, "target": target, "mean": m, "stderr": se, "pass": ok}));
        }
        Ok(ExperimentOutput {
            tables: vec![table, summary],
            checks: vec![],
            extra: json!({
                "clamped_fraction": model.density().clamped_fraction(),
                "lags": verdicts,
            }),
        })
    }
}

// ---------------------------------------------------------------- birkhoff

struct Birkhoff;

impl Birkhoff {
    fn radii(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<Vec<f64>, Violation> {
        let r = cfg
            .params()
            .r_ladder
            .clone()
            .unwrap_or_else(|| default_radii(grid.probe_limit()));
        check_dyadic("r_ladder", &r, 1.0, grid.probe_limit())
            .map_err(|e| violation("r_ladder", e))?;
        Ok(r)
    }
}

impl Experiment for Birkhoff {
    fn name(&self) -> &'static str {
        "birkhoff"
    }

    fn describe(&self) -> &'static str {
        "spread of ball averages of the coefficient against the radius"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        let mut v: Vec<Violation> = Self::radii(cfg, grid).err().into_iter().collect();
        v.extend(need_samples(cfg, 8));
        v
    }

    fn cost(&self, _: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        Cost {
            fields: 4,
            seconds_per_sample: 0.1 * unit_solve(grid),
        }
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let model = model(cfg)?;
        let radii = Self::radii(cfg, model.grid()).map_err(param_error("r_ladder"))?;
        let report = birkhoff_variance_experiment(&model, &cfg.ensemble, &radii, threads)?;
        let mut table = Table::new("birkhoff", &["sample_index", "radius", "ball_average"]);
        for (i, row) in report.rows.iter().enumerate() {
            for (r, v) in radii.iter().zip(row) {
                table.push(vec![i.into(), (*r).into(), (*v).into()]);
            }
        }
        Ok(ExperimentOutput {
            tables: vec![table],
            checks: checks_of([report.check]),
            extra: json!({ "spread": report.spread }),
        })
    }
}

fn param_error(name: &'static str) -> impl Fn(Violation) -> Error {
    move |v| Error::InvalidParameter {
        name,
        reason: v.message,
    }
}

// --------------------------------------------------------------- corrector

struct Corrector;

impl Corrector {
    fn radii(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<Option<Vec<f64>>, Violation> {
        match &cfg.params().r_ladder {
            None => Ok(None),
            Some(r) => {
                check_dyadic("r_ladder", r, 1.0, grid.probe_limit())
                    .map_err(|e| violation("r_ladder", e))?;
                Ok(Some(r.clone()))
            }
        }
    }
}

impl Experiment for Corrector {
    fn name(&self) -> &'static str {
        "corrector"
    }

    fn describe(&self) -> &'static str {
        "periodic cell correctors, effective matrix, optional gradient averages"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        match Self::radii(cfg, grid) {
            Err(v) => vec![v],
            Ok(Some(_)) => need_samples(cfg, 8).into_iter().collect(),
            Ok(None) => vec![],
        }
    }

    fn cost(&self, _: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        Cost {
            fields: 12 + 4 * grid.dim(),
            seconds_per_sample: grid.dim() as f64 * unit_solve(grid),
        }
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let model = model(cfg)?;
        let grid = *model.grid();
        let d = grid.dim();
        let radii = Self::radii(cfg, &grid).map_err(param_error("r_ladder"))?;
        let rows = run_ensemble(&cfg.ensemble, threads, |seed| {
            let a = model.sample(seed)?;
            let (sols, est) = steady_rve(&a, &cfg.solver, vec![seed])?;
            let iterations = sols.iter().map(|s| s.iterations).max().unwrap_or(0);
            let residual = sols.iter().map(|s| s.residual).fold(0.0, f64::max);
            let averages = match &radii {
                Some(r) => gradient_averages(&sols[0], r)?,
                None => vec![],
            };
            Ok((seed, est.matrix, iterations, residual, averages))
        })?;
        let mut cols = vec!["sample_index".to_string()];
        for i in 0..d {
            for j in 0..d {
                cols.push(format!("a_{i}{j}"));
            }
        }
        cols.extend(["cg_iterations".into(), "residual".into()]);
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut table = Table::new("corrector", &col_refs);
        for (seed, m, it, res, _) in &rows {
            let mut row = vec![seed_cell(*seed)];
            row.extend(m.iter().flatten().map(|&v| v.into()));
            row.extend([(*it).into(), (*res).into()]);
            table.push(row);
        }
        let mut out = ExperimentOutput {
            tables: vec![table],
            ..Default::default()
        };
        if let Some(r) = radii {
            let mut t = Table::new(
                "corrector-gradient-averages",
                &["sample_index", "radius", "grad_phi_average"],
            );
            for (seed, _, _, _, av) in &rows {
                for (x, v) in r.iter().zip(av) {
                    t.push(vec![seed_cell(*seed), (*x).into(), (*v).into()]);
                }
            }
            out.tables.push(t);
            let (criterion, correction) = gradient_fluctuation_target(d, cfg.covariance.beta);
            let report = fluctuation_report(
                "corrector-gradient average spread vs r",
                &r,
                rows.iter().map(|x| x.4.clone()).collect(),
                cfg.ensemble.master_seed,
                criterion,
                correction,
            )?;
            out.checks = checks_of([report.check]);
            out.extra = json!({ "spread": report.spread });
        }
        let mean: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| rows.iter().map(|r| r.1[i][j]).sum::<f64>() / rows.len() as f64)
                    .collect()
            })
            .collect();
        out.extra = json!({ "mean_matrix": mean, "details": out.extra });
        Ok(out)
    }
}

// ---------------------------------------------------------------- semigroup

fn step_params(cfg: &ExperimentConfig) -> (f64, f64) {
    (
        cfg.params().theta.unwrap_or(0.1),
        cfg.params().dt_min.unwrap_or(0.01),
    )
}

fn semigroup_cost(plan: &SemigroupPlan, grid: &PeriodicGrid) -> Cost {
    let steps = plan
        .time_grid()
        .and_then(|g| g.nodes(&plan.probes()))
        .map(|n| n.len())
        .unwrap_or(100);
    Cost {
        fields: 24 + 2 * plan.h_radii.len() * grid.dim(),
        seconds_per_sample: 0.6 * steps as f64 * unit_solve(grid),
    }
}

struct SemigroupDecay;

impl SemigroupDecay {
    fn plan(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<SemigroupPlan, Violation> {
        let limit = grid.probe_limit();
        let times = cfg.params().t_ladder.clone().unwrap_or_else(|| {
            let mut t = vec![];
            let mut x: f64 = 1.0;
            while x.sqrt() <= limit {
                t.push(x);
                x *= 4.0;
            }
            t
        });
        let (theta, dt_min) = step_params(cfg);
        let plan = SemigroupPlan {
            direction: direction(cfg, grid)?,
            decay_times: times,
            theta,
            dt_min,
            ..Default::default()
        };
        plan.validate(grid).map_err(|e| violation("t_ladder", e))?;
        Ok(plan)
    }
}

impl Experiment for SemigroupDecay {
    fn name(&self) -> &'static str {
        "semigroup"
    }

    fn describe(&self) -> &'static str {
        "decay of the semigroup and of its gradient in time"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        Self::plan(cfg, grid).err().into_iter().collect()
    }

    fn cost(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        Self::plan(cfg, grid)
            .map(|p| semigroup_cost(&p, grid))
            .unwrap_or(Cost {
                fields: 24,
                seconds_per_sample: 0.0,
            })
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let model = model(cfg)?;
        let grid = *model.grid();
        let plan = Self::plan(cfg, &grid).map_err(param_error("t_ladder"))?;
        let samples = semigroup_ensemble(&model, &cfg.ensemble, &plan, &cfg.solver, threads)?;
        let mut table = Table::new(
            "semigroup",
            &[
                "sample_index",
                "t",
                "mean_u2",
                "mean_grad_u2",
                "weighted_u2",
                "weighted_grad_u2",
            ],
        );
        for s in &samples {
            let r = &s.decay;
            for k in 0..r.times.len() {
                table.push(vec![
                    seed_cell(s.seed),
                    r.times[k].into(),
                    r.mean_u2[k].into(),
                    r.mean_grad_u2[k].into(),
                    r.weighted_u2[k].into(),
                    r.weighted_grad_u2[k].into(),
                ]);
            }
        }
        let report = decay_report(&samples, &plan.decay_times, grid.dim(), cfg.covariance.beta)?;
        Ok(ExperimentOutput {
            tables: vec![table],
            checks: checks_of([report.u_check.clone(), report.grad_check.clone()]),
            extra: json!({ "rms_u": report.u, "rms_grad_u": report.grad_u }),
        })
    }
}

// ------------------------------------------------------------ fluctuations

struct Fluctuations;

impl Fluctuations {
    fn plan(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<SemigroupPlan, Violation> {
        let limit = grid.probe_limit();
        let t = cfg.params().fixed_time.unwrap_or(limit * limit);
        if !(t > 0.0 && t.sqrt() <= limit) {
            return Err(violation(
                "fixed_time",
                format!("sqrt(T) = {} exceeds n/8 = {limit}", t.sqrt()),
            ));
        }
        let radii = cfg
            .params()
            .r_ladder
            .clone()
            .unwrap_or_else(|| default_radii(t.sqrt()));
        check_dyadic("r_ladder", &radii, 1.0, t.sqrt()).map_err(|e| violation("r_ladder", e))?;
        let (theta, dt_min) = step_params(cfg);
        let plan = SemigroupPlan {
            direction: direction(cfg, grid)?,
            fixed_time: Some(t),
            fixed_radii: radii.clone(),
            diagonal_radii: radii,
            theta,
            dt_min,
            ..Default::default()
        };
        plan.validate(grid).map_err(|e| violation("r_ladder", e))?;
        Ok(plan)
    }
}

impl Experiment for Fluctuations {
    fn name(&self) -> &'static str {
        "fluctuations"
    }

    fn describe(&self) -> &'static str {
        "spread of Gaussian flux averages at fixed T and along T = r^2"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        let mut v: Vec<Violation> = Self::plan(cfg, grid).err().into_iter().collect();
        v.extend(need_samples(cfg, 8));
        v
    }

    fn cost(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        Self::plan(cfg, grid)
            .map(|p| semigroup_cost(&p, grid))
            .unwrap_or(Cost {
                fields: 24,
                seconds_per_sample: 0.0,
            })
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let model = model(cfg)?;
        let grid = *model.grid();
        let plan = Self::plan(cfg, &grid).map_err(param_error("r_ladder"))?;
        let samples = semigroup_ensemble(&model, &cfg.ensemble, &plan, &cfg.solver, threads)?;
        let t = plan.fixed_time.unwrap_or_default();
        let mut table = Table::new(
            "fluctuations",
            &["sample_index", "probe", "radius", "t", "flux_average"],
        );
        for s in &samples {
            for (r, v) in plan.fixed_radii.iter().zip(&s.fixed) {
                table.push(vec![
                    seed_cell(s.seed),
                    "fixed".into(),
                    (*r).into(),
                    t.into(),
                    (*v).into(),
                ]);
            }
            for (r, v) in plan.diagonal_radii.iter().zip(&s.diagonal) {
                table.push(vec![
                    seed_cell(s.seed),
                    "diagonal".into(),
                    (*r).into(),
                    (r * r).into(),
                    (*v).into(),
                ]);
            }
        }
        let d = grid.dim();
        let fixed = flux_fixed_report(&samples, &plan, d, cfg.ensemble.master_seed)?;
        let diag = flux_diagonal_report(
            &samples,
            &plan,
            d,
            cfg.covariance.beta,
            cfg.ensemble.master_seed,
        )?;
        Ok(ExperimentOutput {
            tables: vec![table],
            checks: checks_of([fixed.check, diag.check]),
            extra: json!({ "fixed_spread": fixed.spread, "diagonal_spread": diag.spread }),
        })
    }
}

struct HFluctuations;

impl HFluctuations {
    fn plan(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<SemigroupPlan, Violation> {
        let h_limit = grid.side() as f64 / 16.0;
        let radii = cfg
            .params()
            .r_ladder
            .clone()
            .unwrap_or_else(|| default_radii(h_limit));
        check_dyadic("r_ladder", &radii, 1.0, h_limit).map_err(|e| violation("r_ladder", e))?;
        let (theta, dt_min) = step_params(cfg);
        let plan = SemigroupPlan {
            direction: direction(cfg, grid)?,
            h_radii: radii,
            theta,
            dt_min,
            ..Default::default()
        };
        plan.validate(grid).map_err(|e| violation("r_ladder", e))?;
        Ok(plan)
    }
}

impl Experiment for HFluctuations {
    fn name(&self) -> &'static str {
        "h-fluctuations"
    }

    fn describe(&self) -> &'static str {
        "spread of integrated-heat weighted flux pairings at T = r^2"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        let mut v: Vec<Violation> = Self::plan(cfg, grid).err().into_iter().collect();
        v.extend(need_samples(cfg, 8));
        v
    }

    fn cost(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        Self::plan(cfg, grid)
            .map(|p| semigroup_cost(&p, grid))
            .unwrap_or(Cost {
                fields: 24,
                seconds_per_sample: 0.0,
            })
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let model = model(cfg)?;
        let grid = *model.grid();
        let plan = Self::plan(cfg, &grid).map_err(param_error("r_ladder"))?;
        let samples = semigroup_ensemble(&model, &cfg.ensemble, &plan, &cfg.solver, threads)?;
        let mut table = Table::new(
            "h-fluctuations",
            &["sample_index", "radius", "weighted_flux"],
        );
        for s in &samples {
            for (r, v) in plan.h_radii.iter().zip(&s.h_weighted) {
                table.push(vec![seed_cell(s.seed), (*r).into(), (*v).into()]);
            }
        }
        let report = h_fluctuation_report(
            &samples,
            &plan,
            grid.dim(),
            cfg.covariance.beta,
            cfg.ensemble.master_seed,
        )?;
        Ok(ExperimentOutput {
            tables: vec![table],
            checks: checks_of([report.check]),
            extra: json!({ "spread": report.spread }),
        })
    }
}

// ------------------------------------------------------------------ growth

struct Growth;

impl Growth {
    fn offsets(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<Vec<usize>, Violation> {
        let limit = grid.probe_limit();
        let offsets = cfg.params().offsets.clone().unwrap_or_else(|| {
            let all = dyadic(1.0, limit);
            all[all.len().saturating_sub(4)..]
                .iter()
                .map(|&x| x as usize)
                .collect()
        });
        let xs: Vec<f64> = offsets.iter().map(|&x| x as f64).collect();
        check_dyadic("offsets", &xs, 1.0, limit).map_err(|e| violation("offsets", e))?;
        Ok(offsets)
    }
}

impl Experiment for Growth {
    fn name(&self) -> &'static str {
        "growth"
    }

    fn describe(&self) -> &'static str {
        "growth of the extended corrector increments with the offset"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        let mut v: Vec<Violation> = Self::offsets(cfg, grid).err().into_iter().collect();
        if let Err(e) = homoglab::stats::experiments::growth_target(grid.dim(), cfg.covariance.beta)
        {
            v.push(Violation::new("covariance.beta", e.to_string()));
        }
        v
    }

    fn cost(&self, _: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        Cost {
            fields: 20,
            seconds_per_sample: 1.5 * unit_solve(grid),
        }
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let model = model(cfg)?;
        let offsets = Self::offsets(cfg, model.grid()).map_err(param_error("offsets"))?;
        let report =
            corrector_growth_experiment(&model, &cfg.ensemble, &offsets, &cfg.solver, threads)?;
        let mut table = Table::new(
            "growth",
            &["sample_index", "offset", "mean_square_increment"],
        );
        for (i, row) in report.rows.iter().enumerate() {
            for (x, v) in offsets.iter().zip(row) {
                table.push(vec![i.into(), (*x).into(), (*v).into()]);
            }
        }
        Ok(ExperimentOutput {
            tables: vec![table],
            checks: checks_of([report.check]),
            extra: json!({ "profile": report.profile }),
        })
    }
}

// ------------------------------------------------------------- extrapolate

struct Extrapolate;

impl Extrapolate {
    fn plan(cfg: &ExperimentConfig) -> Result<ExtrapolationPlan, Violation> {
        let l = cfg.params().levels.unwrap_or(LevelConfig {
            base_t: 4.0,
            depth: 5,
            orders: 3,
        });
        let plan = ExtrapolationPlan {
            base_t: l.base_t,
            depth: l.depth,
            orders: l.orders,
        };
        plan.validate().map_err(|e| violation("levels", e))?;
        Ok(plan)
    }
}

impl Experiment for Extrapolate {
    fn name(&self) -> &'static str {
        "extrapolate"
    }

    fn describe(&self) -> &'static str {
        "Richardson extrapolants of massive correctors against the periodic corrector"
    }

    fn check(&self, cfg: &ExperimentConfig, _: &PeriodicGrid) -> Vec<Violation> {
        Self::plan(cfg).err().into_iter().collect()
    }

    fn cost(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        let depth = Self::plan(cfg).map(|p| p.depth).unwrap_or(5);
        Cost {
            fields: (depth + 1)
                * (cfg.params().levels.map(|l| l.orders).unwrap_or(3) + 1)
                * grid.dim()
                + 16,
            seconds_per_sample: (grid.dim() * (depth + 2)) as f64 * unit_solve(grid),
        }
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let model = model(cfg)?;
        let plan = Self::plan(cfg).map_err(param_error("levels"))?;
        let summary = extrapolation_ensemble(&model, &cfg.ensemble, &plan, &cfg.solver, threads)?;
        let mut table = Table::new(
            "extrapolate",
            &["sample_index", "order", "t", "grad_error", "ahom_error"],
        );
        for (i, s) in summary.samples.iter().enumerate() {
            for r in &s.rows {
                table.push(vec![
                    i.into(),
                    r.n.into(),
                    r.t.into(),
                    r.grad_error.into(),
                    r.ahom_error.into(),
                ]);
            }
        }
        let mut checks = Vec::new();
        for n in 1..=plan.orders {
            let times = plan.times_for(n);
            let (lo, hi) = (times[0], *times.last().unwrap());
            let (g_bound, h_bound) = if n == 1 { (0.0, 0.0) } else { (-0.35, -0.8) };
            if let Some(f) = summary.grad_fit(n, lo, hi) {
                checks.push(SlopeCheck::new(
                    format!("order-{n} gradient error vs T"),
                    f,
                    SlopeCriterion::AtMost { bound: g_bound },
                ));
            }
            if let Some(f) = summary.ahom_fit(n, lo, hi) {
                checks.push(SlopeCheck::new(
                    format!("order-{n} effective matrix error vs T"),
                    f,
                    SlopeCriterion::AtMost { bound: h_bound },
                ));
            }
        }
        Ok(ExperimentOutput {
            tables: vec![table],
            checks,
            extra: json!({ "grad": summary.grad, "ahom": summary.ahom }),
        })
    }
}

// --------------------------------------------------------------- two-scale

struct TwoScale;

impl TwoScale {
    fn plan(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<TwoScalePlan, Violation> {
        let p = cfg.params();
        let smoothing = match p.smoothing {
            Some(0.0) => None,
            Some(s) if s > 0.0 => Some(s),
            Some(s) => return Err(violation("smoothing", format!("{s} is negative"))),
            None => None,
        };
        let plan = TwoScalePlan {
            epsilons: p
                .epsilons
                .clone()
                .unwrap_or_else(|| vec![0.125, 0.0625, 0.03125]),
            wavenumber: p.wavenumber.unwrap_or(4),
            potential: MacroPotential::default_for(grid.dim()),
            options: TwoScaleOptions { smoothing },
        };
        plan.validate().map_err(|e| violation("epsilons", e))?;
        for n in plan.sides().map_err(|e| violation("epsilons", e))? {
            if let Err(e) = PeriodicGrid::new(grid.dim(), n) {
                return Err(violation("epsilons", e));
            }
        }
        Ok(plan)
    }
}

impl Experiment for TwoScale {
    fn name(&self) -> &'static str {
        "two-scale"
    }

    fn describe(&self) -> &'static str {
        "first-order two-scale expansion error against the scale ratio (grid side m/eps)"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        Self::plan(cfg, grid).err().into_iter().collect()
    }

    fn cost(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        let sides = Self::plan(cfg, grid)
            .and_then(|p| p.sides().map_err(|e| violation("epsilons", e)))
            .unwrap_or_default();
        let max = sides.iter().copied().max().unwrap_or(grid.side());
        let seconds = sides
            .iter()
            .filter_map(|&n| PeriodicGrid::new(grid.dim(), n).ok())
            .map(|g| (g.dim() + 1) as f64 * unit_solve(&g))
            .sum();
        Cost {
            fields: 24 * max.pow(grid.dim() as u32) / grid.len().max(1),
            seconds_per_sample: seconds,
        }
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let grid = cfg.grid()?;
        let plan = Self::plan(cfg, &grid).map_err(param_error("epsilons"))?;
        let summary = two_scale_ensemble(
            grid.dim(),
            &cfg.covariance,
            &cfg.coefficient,
            &cfg.ensemble,
            &plan,
            &cfg.solver,
            threads,
        )?;
        let sides = plan.sides()?;
        let mut table = Table::new(
            "two-scale",
            &[
                "sample_index",
                "epsilon",
                "n",
                "grad_error",
                "norm_grad_v",
                "norm_grad_vhom",
                "norm_grad_expansion",
            ],
        );
        for (i, row) in summary.results.iter().enumerate() {
            for (r, n) in row.iter().zip(&sides) {
                table.push(vec![
                    i.into(),
                    r.epsilon.into(),
                    (*n).into(),
                    r.grad_error.into(),
                    r.norm_grad_v.into(),
                    r.norm_grad_vhom.into(),
                    r.norm_grad_expansion.into(),
                ]);
            }
        }
        Ok(ExperimentOutput {
            tables: vec![table],
            checks: checks_of([summary.check]),
            extra: json!({ "rms_error": summary.error, "log_corrected": summary.corrected, "rhs": plan.potential.describe() }),
        })
    }
}

// ------------------------------------------------------------------ oracle

struct Oracle;

impl Oracle {
    fn plan(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Result<OraclePlan, Violation> {
        let p = cfg.params();
        let deltas = p.deltas.clone().unwrap_or_else(|| vec![0.05, 0.1]);
        if deltas.is_empty() || deltas.iter().any(|d| !(0.0..1.0).contains(d)) {
            return Err(violation("deltas", "every delta must lie in [0, 1)"));
        }
        let times = p.t_ladder.clone().unwrap_or_else(|| vec![4.0, 16.0]);
        let limit = grid.probe_limit();
        if times.is_empty() || times.iter().any(|&t| !(t > 0.0 && t.sqrt() <= limit)) {
            return Err(violation(
                "t_ladder",
                format!("times need 0 < sqrt(T) <= n/8 = {limit}"),
            ));
        }
        let (theta, dt_min) = step_params(cfg);
        let refinements = p.refinements.unwrap_or(1);
        if refinements > 4 {
            return Err(violation(
                "refinements",
                "at most 4 halvings of the time grid",
            ));
        }
        Ok(OraclePlan {
            deltas,
            times,
            direction: direction(cfg, grid)?,
            theta,
            dt_min,
            refinements,
        })
    }
}

impl Experiment for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn describe(&self) -> &'static str {
        "full semigroup against its first-order small-contrast expansion"
    }

    fn check(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<Violation> {
        Self::plan(cfg, grid).err().into_iter().collect()
    }

    fn cost(&self, cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Cost {
        // each halving doubles the number of steps
        let k = Self::plan(cfg, grid)
            .map(|p| p.deltas.len() * p.times.len() * ((1 << (p.refinements + 1)) - 1))
            .unwrap_or(1);
        Cost {
            fields: 24,
            seconds_per_sample: 0.6 * 80.0 * k as f64 * unit_solve(grid),
        }
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        threads: Option<usize>,
    ) -> Result<ExperimentOutput, Error> {
        let grid = cfg.grid()?;
        let model = model(cfg)?;
        let plan = Self::plan(cfg, &grid).map_err(param_error("deltas"))?;
        let rows = run_ensemble(&cfg.ensemble, threads, |seed| {
            oracle_sample(&model, seed, &plan, &cfg.solver)
        })?;
        let mut table = Table::new(
            "oracle",
            &[
                "sample_index",
                "refinement",
                "theta",
                "delta",
                "t",
                "abs_error",
                "rel_error",
                "stepped_abs_error",
            ],
        );
        for (i, reps) in rows.iter().enumerate() {
            for r in reps {
                table.push(vec![
                    i.into(),
                    r.refinement.into(),
                    r.theta.into(),
                    r.delta.into(),
                    r.t.into(),
                    r.abs_error.into(),
                    r.rel_error.into(),
                    r.stepped_abs_error.into(),
                ]);
            }
        }
        // remainder ratio between the largest and smallest positive contrast
        let positive: Vec<f64> = plan.deltas.iter().copied().filter(|&d| d > 0.0).collect();
        let mut ratios = Vec::new();
        if positive.len() >= 2 {
            let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = positive.iter().copied().fold(0.0, f64::max);
            for level in 0..=plan.refinements {
                for &t in &plan.times {
                    let pick = |delta: f64, f: fn(&OracleReport) -> f64| -> f64 {
                        rows.iter()
                            .flat_map(|r| r.iter())
                            .filter(|r| r.refinement == level && r.t == t && r.delta == delta)
                            .map(f)
                            .sum()
                    };
                    let exact = pick(hi, |r| r.abs_error) / pick(lo, |r| r.abs_error);
                    let stepped =
                        pick(hi, |r| r.stepped_abs_error) / pick(lo, |r| r.stepped_abs_error);
                    ratios.push(json!({
                        "refinement": level,
                        "t": t,
                        "delta_low": lo,
                        "delta_high": hi,
                        "ratio": stepped,
                        "ratio_vs_exponential": exact,
                    }));
                }
            }
        }
        Ok(ExperimentOutput {
            tables: vec![table],
            checks: vec![],
            extra: json!({ "remainder_ratios": ratios }),
        })
    }
}
