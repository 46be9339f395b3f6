//! Ensembles for the convergence studies: Richardson extrapolation in the
//! mass, the two-scale expansion in the scale ratio, and the small-contrast
//! expansion in the contrast.

use serde::{Deserialize, Serialize};

use super::ensemble::{run_ensemble, EnsembleSpec};
use super::fit::{loglog_fit, FitPoint, LogCorrection, SlopeCheck, SlopeCriterion};
use super::moments::mean_with_stderr;
use crate::corrector::{steady_rve, SolverConfig};
use crate::error::{Error, Result};
use crate::extrapolation::{build_ladder, subsystematic_report, SubsystematicReport};
use crate::gaussian_field::{
    centred_perturbation, CoefficientMapSpec, CoefficientModel, CovarianceSpec, SampleSeed,
};
use crate::lattice::PeriodicGrid;
use crate::semigroup::TimeGrid;
use crate::smallcontrast::{oracle_compare, OracleReport};
use crate::two_scale::{
    commensurate_wavenumber, run_two_scale, MacroPotential, TwoScaleOptions, TwoScaleResult,
};

fn root_mean_point(x: f64, squares: &[f64]) -> FitPoint {
    let (m, se) = mean_with_stderr(squares);
    let root = m.max(0.0).sqrt();
    FitPoint::new(x, root, if root > 0.0 { se / (2.0 * root) } else { 0.0 })
}

// ----------------------------------------------------------- extrapolation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationPlan {
    pub base_t: f64,
    /// Ladder depth `K`: masses `T_0 2^k` for `k = 0..=K`.
    pub depth: usize,
    /// Highest extrapolation order `N`.
    pub orders: usize,
}

impl ExtrapolationPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_t > 0.0 && self.base_t.is_finite()) {
            return Err(Error::param("base_t", "must be positive"));
        }
        if self.orders == 0 || self.orders > self.depth + 1 {
            return Err(Error::param(
                "orders",
                format!("need 1 <= N <= K + 1 = {}", self.depth + 1),
            ));
        }
        Ok(())
    }

    /// Times at which the order-`n` extrapolant exists.
    pub fn times_for(&self, n: usize) -> Vec<f64> {
        (0..=self.depth + 1 - n)
            .map(|k| self.base_t * 2f64.powi(k as i32))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtrapolationSummary {
    pub samples: Vec<SubsystematicReport>,
    /// `(n, T, <grad_error^2>^(1/2), <ahom_error^2>^(1/2))`, with the
    /// standard errors in the points.
    pub grad: Vec<(usize, FitPoint)>,
    pub ahom: Vec<(usize, FitPoint)>,
}

impl ExtrapolationSummary {
    pub fn grad_points(&self, n: usize) -> Vec<FitPoint> {
        self.grad
            .iter()
            .filter(|(m, _)| *m == n)
            .map(|(_, p)| *p)
            .collect()
    }

    pub fn ahom_points(&self, n: usize) -> Vec<FitPoint> {
        self.ahom
            .iter()
            .filter(|(m, _)| *m == n)
            .map(|(_, p)| *p)
            .collect()
    }

    /// Gradient-error slope of order `n` over `[t_lo, t_hi]`.
    pub fn grad_fit(&self, n: usize, t_lo: f64, t_hi: f64) -> Option<super::ScalingFit> {
        let pts: Vec<FitPoint> = self
            .grad_points(n)
            .into_iter()
            .filter(|p| p.x >= t_lo && p.x <= t_hi)
            .collect();
        loglog_fit(&pts, LogCorrection::None).ok()
    }

    pub fn ahom_fit(&self, n: usize, t_lo: f64, t_hi: f64) -> Option<super::ScalingFit> {
        let pts: Vec<FitPoint> = self
            .ahom_points(n)
            .into_iter()
            .filter(|p| p.x >= t_lo && p.x <= t_hi)
            .collect();
        loglog_fit(&pts, LogCorrection::None).ok()
    }
}

pub fn extrapolation_ensemble(
    model: &CoefficientModel,
    ensemble: &EnsembleSpec,
    plan: &ExtrapolationPlan,
    cfg: &SolverConfig,
    threads: Option<usize>,
) -> Result<ExtrapolationSummary> {
    plan.validate()?;
    let d = model.grid().dim();
    let samples = run_ensemble(ensemble, threads, |seed| {
        let a = model.sample(seed)?;
        let ladders = (0..d)
            .map(|dir| build_ladder(&a, dir, plan.base_t, plan.depth, plan.orders, cfg))
            .collect::<Result<Vec<_>>>()?;
        let (reference, _) = steady_rve(&a, cfg, vec![seed])?;
        subsystematic_report(&a, &ladders, &reference, vec![seed])
    })?;
    let mut grad = Vec::new();
    let mut ahom = Vec::new();
    for (k, row) in samples[0].rows.iter().enumerate() {
        let g2: Vec<f64> = samples
            .iter()
            .map(|s| s.rows[k].grad_error.powi(2))
            .collect();
        let h2: Vec<f64> = samples
            .iter()
            .map(|s| s.rows[k].ahom_error.powi(2))
            .collect();
        grad.push((row.n, root_mean_point(row.t, &g2)));
        ahom.push((row.n, root_mean_point(row.t, &h2)));
    }
    Ok(ExtrapolationSummary {
        samples,
        grad,
        ahom,
    })
}

// --------------------------------------------------------------- two-scale

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoScalePlan {
    pub epsilons: Vec<f64>,
    /// Macroscopic wavenumber; the grid side is `m / eps`.
    pub wavenumber: usize,
    pub potential: MacroPotential,
    pub options: TwoScaleOptions,
}

impl TwoScalePlan {
    pub fn sides(&self) -> Result<Vec<usize>> {
        self.epsilons
            .iter()
            .map(|&eps| {
                let n = self.wavenumber as f64 / eps;
                let side = n.round() as usize;
                if !(eps > 0.0) || (n - side as f64).abs() > 1e-9 * n || !side.is_power_of_two() {
                    return Err(Error::EpsilonNotCommensurate {
                        epsilon: eps,
                        n: side,
                    });
                }
                commensurate_wavenumber(eps, side)?;
                Ok(side)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        super::experiments::check_dyadic(
            "epsilons",
            &self.epsilons.iter().map(|e| 1.0 / e).collect::<Vec<_>>(),
            1.0,
            f64::INFINITY,
        )?;
        self.sides()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoScaleSummary {
    /// `results[sample][eps]`.
    pub results: Vec<Vec<TwoScaleResult>>,
    /// `<grad_error^2>^(1/2)` per epsilon.
    pub error: Vec<FitPoint>,
    /// `error` divided by the logarithmic factor of `xi_{d,beta}(1/eps)`;
    /// this is what the slope check fits.
    pub corrected: Vec<FitPoint>,
    pub check: Option<SlopeCheck>,
}

/// Logarithmic part of `xi_{d,beta}(1/eps)`: one below `beta = 2`, where
/// the rate is a pure power, the whole of `xi` above.
pub fn two_scale_log_factor(d: usize, beta: f64, epsilon: f64) -> Result<f64> {
    if beta < 2.0 {
        return Ok(1.0);
    }
    super::rates::rate(super::rates::RateName::XiDbeta, d, beta, 1.0 / epsilon)
}

/// Rate of the two-scale error in `eps`: `eps xi_{d,beta}(1/eps)`, i.e.
/// `eps^(beta/2)` below `beta = 2` and `eps` up to logarithms above.
pub fn two_scale_target(d: usize, beta: f64) -> Result<SlopeCriterion> {
    super::rates::rate(super::rates::RateName::XiDbeta, d, beta, 2.0)?;
    Ok(SlopeCriterion::Within {
        target: if beta < 2.0 { beta / 2.0 } else { 1.0 },
        tolerance: 0.2,
    })
}

/// Samples an independent coefficient field on every grid `n = m / eps`.
pub fn two_scale_ensemble(
    d: usize,
    covariance: &CovarianceSpec,
    map: &CoefficientMapSpec,
    ensemble: &EnsembleSpec,
    plan: &TwoScalePlan,
    cfg: &SolverConfig,
    threads: Option<usize>,
) -> Result<TwoScaleSummary> {
    plan.validate()?;
    let models = plan
        .sides()?
        .into_iter()
        .map(|n| CoefficientModel::new(&PeriodicGrid::new(d, n)?, covariance, map))
        .collect::<Result<Vec<_>>>()?;
    let results = run_ensemble(ensemble, threads, |seed| {
        plan.epsilons
            .iter()
            .zip(&models)
            .map(|(&eps, model)| {
                let a = model.sample(seed)?;
                run_two_scale(&a, &plan.potential, eps, &plan.options, cfg, vec![seed])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let error: Vec<FitPoint> = plan
        .epsilons
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let sq: Vec<f64> = results.iter().map(|r| r[k].grad_error.powi(2)).collect();
            root_mean_point(eps, &sq)
        })
        .collect();
    let corrected = error
        .iter()
        .map(|p| {
            let f = two_scale_log_factor(d, covariance.beta, p.x)?;
            Ok(FitPoint::new(p.x, p.y / f, p.stderr / f))
        })
        .collect::<Result<Vec<_>>>()?;
    let criterion = two_scale_target(d, covariance.beta)?;
    let check = loglog_fit(&corrected, LogCorrection::None)
        .ok()
        .map(|f| SlopeCheck::new("two-scale gradient error vs eps", f, criterion));
    Ok(TwoScaleSummary {
        results,
        error,
        corrected,
        check,
    })
}

// ----------------------------------------------------------- small contrast

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePlan {
    pub deltas: Vec<f64>,
    pub times: Vec<f64>,
    pub direction: usize,
    pub theta: f64,
    pub dt_min: f64,
    /// Number of time-grid halvings after the base grid.
    #[serde(default)]
    pub refinements: usize,
}

/// One sample of the full-versus-first-order comparison for every
/// `(refinement, delta, T)`, with the perturbation drawn from `model`'s
/// Gaussian.
pub fn oracle_sample(
    model: &CoefficientModel,
    seed: SampleSeed,
    plan: &OraclePlan,
    cfg: &SolverConfig,
) -> Result<Vec<OracleReport>> {
    let atilde = centred_perturbation(&model.gaussian(seed));
    let mut out = Vec::new();
    for level in 0..=plan.refinements {
        for &t in &plan.times {
            let mut grid = TimeGrid::with_steps(t, plan.theta, plan.dt_min)?;
            for _ in 0..level {
                grid = grid.refined();
            }
            for &delta in &plan.deltas {
                let mut rep = oracle_compare(&atilde, plan.direction, t, delta, &grid, cfg)?;
                rep.refinement = level;
                out.push(rep);
            }
        }
    }
    Ok(out)
}
