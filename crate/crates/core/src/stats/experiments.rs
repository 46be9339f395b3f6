//! Ensemble experiments: per-sample measurements and the log-log fits that
//! compare them with the predicted rates.

use serde::{Deserialize, Serialize};

use super::ensemble::{run_ensemble, EnsembleSpec};
use super::fit::{loglog_fit, FitPoint, LogCorrection, ScalingFit, SlopeCheck, SlopeCriterion};
use super::moments::{fluctuation_moment, mean_with_stderr, MomentEstimate};
use crate::corrector::{
    solve_flux_corrector, solve_steady_corrector, CorrectorSolution, SolverConfig,
};
use crate::error::{Error, Result};
use crate::gaussian_field::{CoefficientField, CoefficientModel, SampleSeed};
use crate::lattice::{convolve, window_average_vector, KernelSpec, PeriodicGrid, ScalarField};
use crate::semigroup::{flux_average, DecayRecord, HWeight, Semigroup, TimeGrid};

/// Checks that `xs` is a dyadic ladder of at least three entries in
/// `[lo, hi]`.
pub fn check_dyadic(name: &'static str, xs: &[f64], lo: f64, hi: f64) -> Result<()> {
    if xs.len() < 3 {
        return Err(Error::param(
            name,
            format!("need at least 3 dyadic values, got {}", xs.len()),
        ));
    }
    for w in xs.windows(2) {
        if (w[1] / w[0] - 2.0).abs() > 1e-12 {
            return Err(Error::param(
                name,
                format!("{} -> {} is not a doubling", w[0], w[1]),
            ));
        }
    }
    for &x in xs {
        if !(x >= lo && x <= hi) {
            return Err(Error::ScaleGuard(format!(
                "{name} value {x} outside [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// `sqrt(mean(values))` with a delta-method standard error.
fn root_mean(values: &[f64]) -> FitPoint {
    let (m, se) = mean_with_stderr(values);
    let root = m.max(0.0).sqrt();
    let se_root = if root > 0.0 { se / (2.0 * root) } else { 0.0 };
    FitPoint::new(f64::NAN, root, se_root)
}

fn column<T>(rows: &[T], f: impl Fn(&T) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

fn fit_or_none(points: &[FitPoint], correction: LogCorrection) -> Option<ScalingFit> {
    loglog_fit(points, correction).ok()
}

/// Log correction that applies when `beta` sits exactly at the critical
/// value `d`.
fn critical_correction(d: usize, beta: f64) -> LogCorrection {
    if beta == d as f64 {
        LogCorrection::SqrtLog { shift: 0.0 }
    } else {
        LogCorrection::None
    }
}

// ---------------------------------------------------------------- Birkhoff

/// Averages of `a` over the Euclidean balls `|x| <= r` around the origin.
pub fn ball_averages(a: &ScalarField, radii: &[f64]) -> Vec<f64> {
    let grid = a.grid();
    let dist: Vec<f64> = (0..grid.len())
        .map(|i| grid.distance_from_origin(i))
        .collect();
    radii
        .iter()
        .map(|&r| {
            let (s, c) = dist
                .iter()
                .zip(a.values())
                .filter(|(d, _)| **d <= r)
                .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
            s / c as f64
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BirkhoffReport {
    pub radii: Vec<f64>,
    /// `rows[sample][radius]`.
    pub rows: Vec<Vec<f64>>,
    pub spread: Vec<MomentEstimate>,
    pub check: Option<SlopeCheck>,
}

pub fn birkhoff_target(d: usize, beta: f64) -> (SlopeCriterion, LogCorrection) {
    (
        SlopeCriterion::Within {
            target: -beta.min(d as f64) / 2.0,
            tolerance: 0.15,
        },
        critical_correction(d, beta),
    )
}

pub fn birkhoff_variance_experiment(
    model: &CoefficientModel,
    ensemble: &EnsembleSpec,
    radii: &[f64],
    threads: Option<usize>,
) -> Result<BirkhoffReport> {
    let grid = *model.grid();
    check_dyadic("radii", radii, 1.0, grid.probe_limit())?;
    let rows = run_ensemble(ensemble, threads, |seed| {
        Ok(ball_averages(model.sample(seed)?.field(), radii))
    })?;
    let spread = (0..radii.len())
        .map(|k| fluctuation_moment(&column(&rows, |r| r[k]), 2.0, ensemble.master_seed))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<FitPoint> = radii
        .iter()
        .zip(&spread)
        .map(|(&r, m)| FitPoint::new(r, m.value, m.stderr))
        .collect();
    let beta = model.density().spec().beta;
    let (criterion, correction) = birkhoff_target(grid.dim(), beta);
    let check = fit_or_none(&points, correction)
        .map(|f| SlopeCheck::new("ball-average spread vs r", f, criterion));
    Ok(BirkhoffReport {
        radii: radii.to_vec(),
        rows,
        spread,
        check,
    })
}

// ---------------------------------------------------------- corrector growth

/// Components `(phi, sigma_jk for j < k)` of the extended corrector.
fn extended_components(sol: &CorrectorSolution) -> Vec<ScalarField> {
    let sigma = solve_flux_corrector(&sol.flux, f64::INFINITY);
    let d = sigma.dim();
    let mut out = vec![sol.phi.clone()];
    for j in 0..d {
        for k in j + 1..d {
            out.push(sigma.entry(j, k).clone());
        }
    }
    out
}

/// Spatial mean over base points `z` of the unit-scale smoothed squared
/// increment `(|psi - psi_1(z)|^2)_1(z + x)`, summed over the components
/// of the extended corrector, for `x = |x| e_1`.
pub fn growth_profile(sol: &CorrectorSolution, offsets: &[usize]) -> Result<Vec<f64>> {
    let grid = *sol.phi.grid();
    let limit = grid.probe_limit();
    for &x in offsets {
        if x == 0 || x as f64 > limit {
            return Err(Error::ScaleGuard(format!(
                "offset {x} outside [1, n/8 = {limit}]"
            )));
        }
    }
    let g1 = KernelSpec::gaussian(1.0)?;
    let mut out = vec![0.0; offsets.len()];
    for f in extended_components(sol) {
        let f1 = convolve(&f, &g1)?;
        let second = f.inner(&f) / grid.len() as f64 + f1.inner(&f1) / grid.len() as f64;
        for (o, &x) in out.iter_mut().zip(offsets) {
            let mut offset = vec![0i64; grid.dim()];
            offset[0] = x as i64;
            let shifted = f1.translated(&offset);
            let cross = f1
                .values()
                .iter()
                .zip(shifted.values())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / grid.len() as f64;
            *o += second - 2.0 * cross;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub offsets: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
    /// `<value>^(1/2)` per offset.
    pub profile: Vec<FitPoint>,
    pub check: Option<SlopeCheck>,
}

/// Growth law of the extended corrector: a power fit below `beta = 2`,
/// otherwise an envelope after removing the logarithmic factor.
pub fn growth_target(d: usize, beta: f64) -> Result<(SlopeCriterion, LogCorrection)> {
    super::rates::rate(super::rates::RateName::XiDbeta, d, beta, 2.0)?;
    Ok(if beta < 2.0 {
        (
            SlopeCriterion::Within {
                target: 1.0 - beta / 2.0,
                tolerance: 0.15,
            },
            LogCorrection::None,
        )
    } else if beta == 2.0 && d == 2 {
        (
            SlopeCriterion::AtMost { bound: 0.15 },
            LogCorrection::Log { shift: 2.0 },
        )
    } else if d == 2 || beta == 2.0 {
        (
            SlopeCriterion::AtMost { bound: 0.15 },
            LogCorrection::SqrtLog { shift: 2.0 },
        )
    } else {
        (SlopeCriterion::AtMost { bound: 0.15 }, LogCorrection::None)
    })
}

pub fn corrector_growth_experiment(
    model: &CoefficientModel,
    ensemble: &EnsembleSpec,
    offsets: &[usize],
    cfg: &SolverConfig,
    threads: Option<usize>,
) -> Result<GrowthReport> {
    let grid = *model.grid();
    let xs: Vec<f64> = offsets.iter().map(|&x| x as f64).collect();
    check_dyadic("offsets", &xs, 1.0, grid.probe_limit())?;
    let rows = run_ensemble(ensemble, threads, |seed| {
        let a = model.sample(seed)?;
        growth_profile(&solve_steady_corrector(&a, 0, cfg)?, offsets)
    })?;
    let profile: Vec<FitPoint> = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| FitPoint {
            x,
            ..root_mean(&column(&rows, |r| r[k]))
        })
        .collect();
    let (criterion, correction) = growth_target(grid.dim(), model.density().spec().beta)?;
    let check = fit_or_none(&profile, correction)
        .map(|f| SlopeCheck::new("extended corrector growth vs |x|", f, criterion));
    Ok(GrowthReport {
        offsets: offsets.to_vec(),
        rows,
        profile,
        check,
    })
}

// -------------------------------------------------- corrector-gradient averages

/// Component `direction` of `(grad phi * g_r)(0)` for every radius.
pub fn gradient_averages(sol: &CorrectorSolution, radii: &[f64]) -> Result<Vec<f64>> {
    let g = sol.grad_phi();
    radii
        .iter()
        .map(|&r| Ok(window_average_vector(&g, &KernelSpec::gaussian(r)?, 0)?[sol.direction]))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluctuationReport {
    pub abscissae: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub spread: Vec<MomentEstimate>,
    pub check: Option<SlopeCheck>,
}

pub fn fluctuation_report(
    label: &str,
    abscissae: &[f64],
    rows: Vec<Vec<f64>>,
    master_seed: u64,
    criterion: SlopeCriterion,
    correction: LogCorrection,
) -> Result<FluctuationReport> {
    let spread = (0..abscissae.len())
        .map(|k| fluctuation_moment(&column(&rows, |r| r[k]), 2.0, master_seed))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<FitPoint> = abscissae
        .iter()
        .zip(&spread)
        .map(|(&x, m)| FitPoint::new(x, m.value, m.stderr))
        .collect();
    let check = fit_or_none(&points, correction).map(|f| SlopeCheck::new(label, f, criterion));
    Ok(FluctuationReport {
        abscissae: abscissae.to_vec(),
        rows,
        spread,
        check,
    })
}

/// `pi_*(r)^(-1/2)` exponent: `-beta/2` below `d`, `-d/2` above.
pub fn gradient_fluctuation_target(d: usize, beta: f64) -> (SlopeCriterion, LogCorrection) {
    let correction = if beta == d as f64 {
        // pi_*^(-1/2) = r^(-d/2) log^(1/2) r
        LogCorrection::SqrtLog { shift: 0.0 }
    } else {
        LogCorrection::None
    };
    (
        SlopeCriterion::Within {
            target: -beta.min(d as f64) / 2.0,
            tolerance: 0.2,
        },
        correction,
    )
}

pub fn gradient_fluctuation_experiment(
    model: &CoefficientModel,
    ensemble: &EnsembleSpec,
    radii: &[f64],
    cfg: &SolverConfig,
    threads: Option<usize>,
) -> Result<FluctuationReport> {
    let grid = *model.grid();
    check_dyadic("radii", radii, 1.0, grid.probe_limit())?;
    let rows = run_ensemble(ensemble, threads, |seed| {
        let a = model.sample(seed)?;
        gradient_averages(&solve_steady_corrector(&a, 0, cfg)?, radii)
    })?;
    let (criterion, correction) =
        gradient_fluctuation_target(grid.dim(), model.density().spec().beta);
    fluctuation_report(
        "corrector-gradient average spread vs r",
        radii,
        rows,
        ensemble.master_seed,
        criterion,
        correction,
    )
}

// ---------------------------------------------------------------- semigroup

/// Probe times and radii collected along a single semigroup run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupPlan {
    pub direction: usize,
    /// Times at which the spatial decay statistics are recorded.
    pub decay_times: Vec<f64>,
    /// Fixed time for flux averages over `fixed_radii`.
    pub fixed_time: Option<f64>,
    pub fixed_radii: Vec<f64>,
    /// Radii for flux averages at `t = r^2`.
    pub diagonal_radii: Vec<f64>,
    /// Radii for integrated-heat weighted averages at `t = r^2`.
    pub h_radii: Vec<f64>,
    pub theta: f64,
    pub dt_min: f64,
}

impl Default for SemigroupPlan {
    fn default() -> Self {
        Self {
            direction: 0,
            decay_times: vec![],
            fixed_time: None,
            fixed_radii: vec![],
            diagonal_radii: vec![],
            h_radii: vec![],
            theta: 0.1,
            dt_min: 0.01,
        }
    }
}

impl SemigroupPlan {
    /// Sorted union of every probe time.
    pub fn probes(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.decay_times.clone();
        p.extend(self.fixed_time);
        p.extend(self.diagonal_radii.iter().map(|r| r * r));
        p.extend(self.h_radii.iter().map(|r| r * r));
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }

    pub fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        if self.direction >= grid.dim() {
            return Err(Error::param(
                "direction",
                format!("{} >= d = {}", self.direction, grid.dim()),
            ));
        }
        let limit = grid.probe_limit();
        let probes = self.probes();
        if probes.is_empty() {
            return Err(Error::param("probes", "no probe times requested"));
        }
        for &t in &probes {
            if !(t > 0.0) || t.sqrt() > limit {
                return Err(Error::ScaleGuard(format!(
                    "probe time {t}: sqrt(t) must lie in (0, n/8 = {limit}]"
                )));
            }
        }
        if !self.fixed_radii.is_empty() {
            let t = self
                .fixed_time
                .ok_or_else(|| Error::param("fixed_time", "required with fixed_radii"))?;
            for &r in &self.fixed_radii {
                if !(r >= 1.0 && r <= t.sqrt()) {
                    return Err(Error::ScaleGuard(format!(
                        "radius {r} outside [1, sqrt(T) = {}]",
                        t.sqrt()
                    )));
                }
            }
        }
        for &r in &self.diagonal_radii {
            if r < 1.0 {
                return Err(Error::ScaleGuard(format!("radius {r} below 1")));
            }
        }
        let h_limit = grid.side() as f64 / 16.0;
        for &r in &self.h_radii {
            if !(1.0..=h_limit).contains(&r) {
                return Err(Error::ScaleGuard(format!(
                    "h-weight radius {r} outside [1, n/16 = {h_limit}]"
                )));
            }
        }
        self.time_grid()?;
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let t_final = self.probes().last().copied().unwrap_or(1.0);
        TimeGrid::with_steps(t_final, self.theta, self.dt_min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupSample {
    pub seed: SampleSeed,
    pub decay: DecayRecord,
    /// Component `direction` of `(q(T) * g_r)(0)` per fixed radius.
    pub fixed: Vec<f64>,
    /// Component `direction` of `(q(r^2) * g_r)(0)` per diagonal radius.
    pub diagonal: Vec<f64>,
    /// Sum of the components of `q(r^2) * f_r` per h radius.
    pub h_weighted: Vec<f64>,
}

/// A plan bound to a grid with its weights precomputed.
pub struct SemigroupProbes {
    plan: SemigroupPlan,
    h_weights: Vec<HWeight>,
    time_grid: TimeGrid,
}

impl SemigroupProbes {
    pub fn new(grid: &PeriodicGrid, plan: &SemigroupPlan) -> Result<Self> {
        plan.validate(grid)?;
        Ok(Self {
            plan: plan.clone(),
            h_weights: plan
                .h_radii
                .iter()
                .map(|&r| HWeight::new(grid, r))
                .collect::<Result<_>>()?,
            time_grid: plan.time_grid()?,
        })
    }

    pub fn plan(&self) -> &SemigroupPlan {
        &self.plan
    }

    pub fn run(
        &self,
        a: &CoefficientField,
        seed: SampleSeed,
        cfg: &SolverConfig,
    ) -> Result<SemigroupSample> {
        let p = &self.plan;
        let dir = p.direction;
        let mut fixed = vec![f64::NAN; p.fixed_radii.len()];
        let mut diagonal = vec![f64::NAN; p.diagonal_radii.len()];
        let mut h_weighted = vec![f64::NAN; p.h_radii.len()];
        let sg = Semigroup::new(a, cfg)?;
        let decay = sg.run(dir, &self.time_grid, &p.probes(), |state| {
            if Some(state.t) == p.fixed_time {
                for (v, &r) in fixed.iter_mut().zip(&p.fixed_radii) {
                    *v = flux_average(state, r)?[dir];
                }
            }
            for (v, &r) in diagonal.iter_mut().zip(&p.diagonal_radii) {
                if state.t == r * r {
                    *v = flux_average(state, r)?[dir];
                }
            }
            for (v, w) in h_weighted.iter_mut().zip(&self.h_weights) {
                if state.t == w.radius() * w.radius() {
                    *v = w.average(state)?.iter().sum();
                }
            }
            Ok(())
        })?;
        Ok(SemigroupSample {
            seed,
            decay,
            fixed,
            diagonal,
            h_weighted,
        })
    }
}

pub fn semigroup_ensemble(
    model: &CoefficientModel,
    ensemble: &EnsembleSpec,
    plan: &SemigroupPlan,
    cfg: &SolverConfig,
    threads: Option<usize>,
) -> Result<Vec<SemigroupSample>> {
    let probes = SemigroupProbes::new(model.grid(), plan)?;
    run_ensemble(ensemble, threads, |seed| {
        probes.run(&model.sample(seed)?, seed, cfg)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    /// `<mean u^2>^(1/2)` per time.
    pub u: Vec<FitPoint>,
    /// `<mean |grad u|^2>^(1/2)` per time.
    pub grad_u: Vec<FitPoint>,
    pub u_check: Option<SlopeCheck>,
    pub grad_check: Option<SlopeCheck>,
}

/// Decay exponents of `u` and of `grad u`: the latter carries one more
/// factor `T^(-1/2)`.
pub fn decay_targets(d: usize, beta: f64) -> (SlopeCriterion, SlopeCriterion, LogCorrection) {
    let tol = if beta == d as f64 { 0.2 } else { 0.15 };
    let u = -0.5 - beta.min(d as f64) / 4.0;
    (
        SlopeCriterion::Within {
            target: u,
            tolerance: tol,
        },
        SlopeCriterion::Within {
            target: u - 0.5,
            tolerance: tol,
        },
        critical_correction(d, beta),
    )
}

pub fn decay_report(
    samples: &[SemigroupSample],
    times: &[f64],
    d: usize,
    beta: f64,
) -> Result<DecayReport> {
    let mut u = Vec::new();
    let mut grad_u = Vec::new();
    for &t in times {
        let idx = |s: &SemigroupSample| {
            s.decay
                .at(t)
                .ok_or_else(|| Error::param("decay_times", format!("time {t} was not probed")))
        };
        let u2 = samples
            .iter()
            .map(|s| Ok(s.decay.mean_u2[idx(s)?]))
            .collect::<Result<Vec<_>>>()?;
        let g2 = samples
            .iter()
            .map(|s| Ok(s.decay.mean_grad_u2[idx(s)?]))
            .collect::<Result<Vec<_>>>()?;
        u.push(FitPoint {
            x: t,
            ..root_mean(&u2)
        });
        grad_u.push(FitPoint {
            x: t,
            ..root_mean(&g2)
        });
    }
    let (cu, cg, corr) = decay_targets(d, beta);
    Ok(DecayReport {
        times: times.to_vec(),
        u_check: fit_or_none(&u, corr).map(|f| SlopeCheck::new("rms u vs T", f, cu)),
        grad_check: fit_or_none(&grad_u, corr).map(|f| SlopeCheck::new("rms grad u vs T", f, cg)),
        u,
        grad_u,
    })
}

/// Flux-average fluctuation exponent in `r` at fixed `T`: `-d/2`, times
/// `mu_beta(T)` which does not depend on `r`.
pub fn flux_fixed_target(d: usize) -> SlopeCriterion {
    SlopeCriterion::Within {
        target: -(d as f64) / 2.0,
        tolerance: 0.2,
    }
}

/// Along `T = r^2` the factor `mu_beta(r^2)` contributes `(d - beta)/2`
/// below the critical exponent.
pub fn flux_diagonal_target(d: usize, beta: f64) -> (SlopeCriterion, LogCorrection) {
    let df = d as f64;
    let extra = if beta < df { (df - beta) / 2.0 } else { 0.0 };
    let correction = if beta == df {
        // mu_beta(r^2) = log^(1/2)(r^2)
        LogCorrection::SqrtLog { shift: 0.0 }
    } else {
        LogCorrection::None
    };
    (
        SlopeCriterion::Within {
            target: -df / 2.0 + extra,
            tolerance: 0.2,
        },
        correction,
    )
}

pub fn flux_fixed_report(
    samples: &[SemigroupSample],
    plan: &SemigroupPlan,
    d: usize,
    master_seed: u64,
) -> Result<FluctuationReport> {
    let rows = samples.iter().map(|s| s.fixed.clone()).collect();
    fluctuation_report(
        "flux average spread vs r at fixed T",
        &plan.fixed_radii,
        rows,
        master_seed,
        flux_fixed_target(d),
        LogCorrection::None,
    )
}

pub fn flux_diagonal_report(
    samples: &[SemigroupSample],
    plan: &SemigroupPlan,
    d: usize,
    beta: f64,
    master_seed: u64,
) -> Result<FluctuationReport> {
    let rows = samples.iter().map(|s| s.diagonal.clone()).collect();
    let (criterion, correction) = flux_diagonal_target(d, beta);
    fluctuation_report(
        "flux average spread vs r at T = r^2",
        &plan.diagonal_radii,
        rows,
        master_seed,
        criterion,
        correction,
    )
}

/// Envelope for the integrated-heat weighted flux: `chi_{d,beta}` is a
/// power `1 - beta/2` (times a log in two dimensions) below `beta = 2`,
/// logarithmic or constant above.
pub fn h_fluctuation_target(d: usize, beta: f64) -> Result<SlopeCriterion> {
    super::rates::rate(super::rates::RateName::ChiDbeta, d, beta, 2.0)?;
    Ok(if beta <= 2.0 {
        SlopeCriterion::AtMost {
            bound: (1.0 - beta / 2.0).max(0.0) + 0.2,
        }
    } else {
        SlopeCriterion::AtMost { bound: 0.2 }
    })
}

pub fn h_fluctuation_report(
    samples: &[SemigroupSample],
    plan: &SemigroupPlan,
    d: usize,
    beta: f64,
    master_seed: u64,
) -> Result<FluctuationReport> {
    let rows = samples.iter().map(|s| s.h_weighted.clone()).collect();
    fluctuation_report(
        "h-weighted flux spread vs r",
        &plan.h_radii,
        rows,
        master_seed,
        h_fluctuation_target(d, beta)?,
        LogCorrection::None,
    )
}

// ------------------------------------------------------------- field check

/// Spatial estimates of `E[g(x) g(x + l e_1)]`, one per lag.
pub fn lag_covariances(g: &ScalarField, lags: &[usize]) -> Vec<f64> {
    let d = g.grid().dim();
    let n = g.grid().len() as f64;
    lags.iter()
        .map(|&l| {
            let mut offset = vec![0i64; d];
            offset[0] = l as i64;
            g.inner(&g.translated(&offset)) / n
        })
        .collect()
}
