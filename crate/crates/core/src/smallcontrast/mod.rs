//! First-order expansion in the contrast `delta` of `a = 1 + delta a_tilde`,
//! evaluated in closed form with the lattice heat kernel.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::corrector::SolverConfig;
use crate::error::{Error, Result};
use crate::gaussian_field::small_contrast_from_perturbation;
use crate::lattice::{PeriodicGrid, ScalarField, Spectral};
use crate::semigroup::{Semigroup, TimeGrid};

/// Fourier multiplier `exp(-t lambda(k))` of the lattice heat semigroup.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    t: f64,
    multiplier: Vec<f64>,
}

impl HeatKernel {
    pub fn new(grid: &PeriodicGrid, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param("t", "heat kernel time must be nonnegative"));
        }
        let sp = Spectral::for_grid(grid);
        Ok(Self {
            t,
            multiplier: sp.neg_laplacian().iter().map(|l| (-t * l).exp()).collect(),
        })
    }

    /// Product of the implicit-Euler symbols `(1 + dt_k lambda)^-1` over the
    /// steps of `time_grid`, the discrete counterpart of `exp(-T lambda)`.
    pub fn implicit_euler(grid: &PeriodicGrid, time_grid: &TimeGrid) -> Result<Self> {
        let nodes = time_grid.nodes(&[])?;
        let sp = Spectral::for_grid(grid);
        let mut multiplier = vec![1.0; grid.len()];
        let mut prev = 0.0;
        for &t in &nodes {
            let dt = t - prev;
            prev = t;
            for (m, l) in multiplier.iter_mut().zip(sp.neg_laplacian()) {
                *m /= 1.0 + dt * l;
            }
        }
        Ok(Self {
            t: time_grid.t_final,
            multiplier,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }
}

/// Fourier coefficients of the first-order initial datum
/// `div(a_tilde_edge e)`, where the edge value is the arithmetic mean of
/// the two endpoints (the linearization of the harmonic mean).
fn initial_datum_hat(sp: &Spectral, atilde: &ScalarField, direction: usize) -> Vec<Complex64> {
    let w = sp.forward_symbol(direction);
    let mut hat = sp.forward_real(atilde.values());
    for (z, wm) in hat.iter_mut().zip(w) {
        // (1 - conj(w)) (1 + w) / 2 with w = wm + 1
        let omega = *wm + 1.0;
        *z *= (Complex64::new(1.0, 0.0) - omega.conj()) * (omega + 1.0) * 0.5;
    }
    hat
}

fn check_direction(grid: &PeriodicGrid, direction: usize) -> Result<()> {
    if direction >= grid.dim() {
        return Err(Error::param(
            "direction",
            format!("axis {direction} outside the grid"),
        ));
    }
    Ok(())
}

/// `u_bar(T) = exp(T Laplacian) div(a_tilde_edge e)`, the coefficient of
/// `delta` in the semigroup solution.
pub fn first_order_semigroup(
    atilde: &ScalarField,
    direction: usize,
    t: f64,
) -> Result<ScalarField> {
    let heat = HeatKernel::new(atilde.grid(), t)?;
    propagate(atilde, direction, &heat)
}

/// The same prediction propagated with the implicit-Euler steps of
/// `time_grid`. Since `u(0)` is already of order `delta`, this is exactly
/// the first-order term of the time-stepped scheme, so comparing against it
/// isolates the contrast remainder from the time-stepping error.
pub fn first_order_semigroup_stepped(
    atilde: &ScalarField,
    direction: usize,
    time_grid: &TimeGrid,
) -> Result<ScalarField> {
    let heat = HeatKernel::implicit_euler(atilde.grid(), time_grid)?;
    propagate(atilde, direction, &heat)
}

fn propagate(atilde: &ScalarField, direction: usize, heat: &HeatKernel) -> Result<ScalarField> {
    let grid = *atilde.grid();
    check_direction(&grid, direction)?;
    let sp = Spectral::for_grid(&grid);
    let mut hat = initial_datum_hat(&sp, atilde, direction);
    for (z, m) in hat.iter_mut().zip(heat.multiplier()) {
        *z *= m;
    }
    Ok(ScalarField::from_raw(grid, sp.inverse_real(hat)))
}

/// Per-sample precomputation for evaluating `grad u_bar(tau)` at the
/// origin for many `tau`.
struct OriginGradient {
    sp: Arc<Spectral>,
    /// `(w_j - 1) u_bar_hat(0)` per axis.
    weighted: Vec<Vec<Complex64>>,
}

impl OriginGradient {
    fn new(atilde: &ScalarField, direction: usize) -> Self {
        let grid = *atilde.grid();
        let sp = Spectral::for_grid(&grid);
        let u0 = initial_datum_hat(&sp, atilde, direction);
        let weighted = (0..grid.dim())
            .map(|j| {
                u0.iter()
                    .zip(sp.forward_symbol(j))
                    .map(|(u, w)| u * w)
                    .collect()
            })
            .collect();
        Self { sp, weighted }
    }

    fn at(&self, tau: f64) -> Vec<f64> {
        let lam = self.sp.neg_laplacian();
        let n = lam.len() as f64;
        self.weighted
            .iter()
            .map(|c| {
                c.iter()
                    .zip(lam)
                    .map(|(z, l)| z.re * (-tau * l).exp())
                    .sum::<f64>()
                    / n
            })
            .collect()
    }
}

/// Upper bound on quadrature doublings.
const MAX_REFINEMENTS: usize = 12;
/// Relative change between successive refinements accepted as converged.
pub const QUADRATURE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxAverageOracle {
    /// `e + int_0^T grad u_bar(4s + r^2)(0) ds`.
    pub value: Vec<f64>,
    /// Relative change of the integral over the last refinement.
    pub last_change: f64,
    pub intervals: usize,
}

/// First-order flux average at the origin,
/// `e + int_0^T grad u_bar(4s + r^2)(0) ds`, by trapezoidal quadrature on
/// geometric nodes in `tau = 4s + r^2`, doubled until two successive
/// results differ by at most 2%.
pub fn first_order_flux_average(
    atilde: &ScalarField,
    direction: usize,
    t: f64,
    r: f64,
) -> Result<FluxAverageOracle> {
    let grid = *atilde.grid();
    check_direction(&grid, direction)?;
    if !(r > 0.0 && r <= t.sqrt()) {
        return Err(Error::ScaleGuard(format!(
            "radius {r} must satisfy 0 < r <= sqrt(T) = {}",
            t.sqrt()
        )));
    }
    let og = OriginGradient::new(atilde, direction);
    let lo = r * r;
    let hi = 4.0 * t + r * r;
    let span = (hi / lo).ln();
    let mut intervals = 4;
    let integrate = |m: usize| -> Vec<f64> {
        let h = span / m as f64;
        let mut acc = vec![0.0; grid.dim()];
        for k in 0..=m {
            let tau = lo * (k as f64 * h).exp();
            // d s = d tau / 4 = tau d(ln tau) / 4
            let w = if k == 0 || k == m { 0.5 * h } else { h } * tau / 4.0;
            for (a, g) in acc.iter_mut().zip(og.at(tau)) {
                *a += w * g;
            }
        }
        acc
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut prev = integrate(intervals);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        intervals *= 2;
        let next = integrate(intervals);
        let diff: Vec<f64> = next.iter().zip(&prev).map(|(a, b)| a - b).collect();
        let scale = norm(&next);
        change = if scale == 0.0 {
            0.0
        } else {
            norm(&diff) / scale
        };
        prev = next;
        if change <= QUADRATURE_TOLERANCE {
            let mut value = prev;
            value[direction] += 1.0;
            return Ok(FluxAverageOracle {
                value,
                last_change: change,
                intervals,
            });
        }
    }
    Err(Error::QuadratureNotConverged { change })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub delta: f64,
    pub t: f64,
    pub theta: f64,
    /// Halvings of the time grid relative to the caller's base grid.
    pub refinement: usize,
    /// `|u_full(T) - delta u_bar(T)|_2`.
    pub abs_error: f64,
    /// `abs_error / |delta u_bar(T)|_2`; zero when `delta = 0`.
    pub rel_error: f64,
    /// Distance to the prediction propagated with the same time steps as
    /// the full solve; free of time-stepping error, so it is `O(delta^2)`.
    pub stepped_abs_error: f64,
}

/// Runs the full semigroup on `1 + delta a_tilde` and compares it with the
/// first-order prediction at time `t`.
pub fn oracle_compare(
    atilde: &ScalarField,
    direction: usize,
    t: f64,
    delta: f64,
    time_grid: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<OracleReport> {
    let a = small_contrast_from_perturbation(atilde.clone(), delta)?;
    let grid = TimeGrid {
        t_final: t,
        ..*time_grid
    };
    let sg = Semigroup::new(&a, cfg)?;
    let state = sg.step_through(direction, &grid, &[], |_, _, _| Ok(()))?;
    let predicted = first_order_semigroup(atilde, direction, t)?.scaled(delta);
    let abs_error = state.u.sub(&predicted).norm();
    let scale = predicted.norm();
    let rel_error = if delta == 0.0 || scale == 0.0 {
        0.0
    } else {
        abs_error / scale
    };
    let stepped = first_order_semigroup_stepped(atilde, direction, &grid)?.scaled(delta);
    Ok(OracleReport {
        delta,
        t,
        theta: grid.theta,
        refinement: 0,
        abs_error,
        rel_error,
        stepped_abs_error: state.u.sub(&stepped).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::gradient;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(2, 32).unwrap()
    }

    #[test]
    fn constant_perturbation_is_invisible() {
        let at = ScalarField::constant(grid(), 0.3);
        assert!(first_order_semigroup(&at, 0, 2.0).unwrap().max_abs() < 1e-15);
        let f = first_order_flux_average(&at, 1, 16.0, 2.0).unwrap();
        assert!(f.value[0].abs() < 1e-15 && (f.value[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heat_multiplier_composes() {
        let g = grid();
        let a = HeatKernel::new(&g, 1.3).unwrap();
        let b = HeatKernel::new(&g, 2.6).unwrap();
        assert_eq!(a.multiplier()[0], 1.0);
        for (x, y) in a.multiplier().iter().zip(b.multiplier()) {
            assert!((x * x - y).abs() <= 1e-15 * y.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn single_mode_is_scaled_by_symbols() {
        let g = grid();
        let k = [2usize, 5];
        let phase =
            |c: [usize; 3]| 2.0 * std::f64::consts::PI * (k[0] * c[0] + k[1] * c[1]) as f64 / 32.0;
        let at = ScalarField::from_fn(g, |c| 0.5 * phase(c).cos());
        let t = 0.8;
        let ubar = first_order_semigroup(&at, 0, t).unwrap();
        let sp = Spectral::for_grid(&g);
        let m = g.index(&k);
        let omega = sp.forward_symbol(0)[m] + 1.0;
        let symbol = (Complex64::new(1.0, 0.0) - omega.conj())
            * (omega + 1.0)
            * 0.5
            * (-t * sp.neg_laplacian()[m]).exp();
        let want = ScalarField::from_fn(g, |c| {
            0.5 * (symbol * Complex64::from_polar(1.0, phase(c))).re
        });
        assert!(ubar.sub(&want).max_abs() < 1e-13);
    }

    #[test]
    fn decays_monotonically() {
        let at = ScalarField::from_fn(grid(), |c| (((c[0] * 7 + c[1] * 3) % 5) as f64 - 2.0) / 2.0);
        let norms: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|&t| first_order_semigroup(&at, 0, t).unwrap().norm())
            .collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn flux_quadrature_matches_closed_form() {
        let g = grid();
        let at = ScalarField::from_fn(g, |c| ((c[0] * 5 + c[1] * 11) % 7) as f64 / 3.5 - 1.0);
        let (t, r) = (16.0, 2.0);
        let got = first_order_flux_average(&at, 0, t, r).unwrap();
        // int_0^T exp(-(4s + r^2) lam) ds = exp(-r^2 lam) (1 - exp(-4 T lam)) / (4 lam)
        let sp = Spectral::for_grid(&g);
        let u0 = initial_datum_hat(&sp, &at, 0);
        let mut integrated: Vec<Complex64> = u0
            .iter()
            .zip(sp.neg_laplacian())
            .map(|(z, &l)| {
                if l == 0.0 {
                    z * t
                } else {
                    z * ((-r * r * l).exp() * (1.0 - (-4.0 * t * l).exp()) / (4.0 * l))
                }
            })
            .collect();
        sp.inverse_in_place(&mut integrated);
        let field = ScalarField::from_raw(g, integrated.iter().map(|z| z.re).collect());
        let grad = gradient(&field);
        let want = [1.0 + grad.component(0)[0], grad.component(1)[0]];
        let err = ((got.value[0] - want[0]).powi(2) + (got.value[1] - want[1]).powi(2)).sqrt();
        let size = ((want[0] - 1.0).powi(2) + want[1].powi(2)).sqrt();
        assert!(err <= 0.02 * size, "err {err} size {size}");
        assert!(got.last_change <= QUADRATURE_TOLERANCE);
    }

    #[test]
    fn zero_contrast_report() {
        let at = ScalarField::from_fn(grid(), |c| if c[0] % 2 == 0 { 0.5 } else { -0.5 });
        let rep = oracle_compare(
            &at,
            0,
            4.0,
            0.0,
            &TimeGrid::new(4.0).unwrap(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.abs_error, 0.0);
        assert_eq!(rep.rel_error, 0.0);
        assert_eq!(rep.stepped_abs_error, 0.0);
    }

    #[test]
    fn report_improves_under_time_refinement() {
        let at = ScalarField::from_fn(grid(), |c| (((c[0] * 7 + c[1] * 3) % 5) as f64 - 2.0) / 2.0);
        let coarse = TimeGrid::with_steps(4.0, 0.2, 0.02).unwrap();
        let cfg = SolverConfig::default();
        let a = oracle_compare(&at, 0, 4.0, 0.05, &coarse, &cfg).unwrap();
        let b = oracle_compare(&at, 0, 4.0, 0.05, &coarse.refined(), &cfg).unwrap();
        assert!(b.rel_error < a.rel_error, "{} {}", a.rel_error, b.rel_error);
    }

    #[test]
    fn stepped_kernel_approaches_the_exponential() {
        let g = grid();
        let exact = HeatKernel::new(&g, 4.0).unwrap();
        let coarse = TimeGrid::with_steps(4.0, 0.1, 0.01).unwrap();
        let err = |tg: &TimeGrid| {
            let k = HeatKernel::implicit_euler(&g, tg).unwrap();
            k.multiplier()
                .iter()
                .zip(exact.multiplier())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(&coarse), err(&coarse.refined()));
        assert!(e1 < 0.05 && e2 < 0.6 * e1, "{e1} {e2}");
    }
}
