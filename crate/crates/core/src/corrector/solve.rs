use serde::{Deserialize, Serialize};

use super::cg::{build_preconditioner, conjugate_gradient, DiffusionOperator};
use crate::error::{Error, Result};
use crate::gaussian_field::CoefficientField;
use crate::lattice::{gradient, PeriodicGrid, ScalarField, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    /// Defaults to `10 n^(d/2)` when absent.
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default = "default_preconditioner")]
    pub preconditioner: String,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_preconditioner() -> String {
    "spectral".into()
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: default_tol(),
            max_iter: None,
            preconditioner: default_preconditioner(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-4) {
            return Err(Error::param("rel_tol", "must lie in (0, 1e-4]"));
        }
        if self.max_iter == Some(0) {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if !super::preconditioner_names().any(|n| n == self.preconditioner) {
            return Err(Error::UnknownStrategy {
                kind: "preconditioner",
                name: self.preconditioner.clone(),
            });
        }
        Ok(())
    }

    pub fn iteration_cap(&self, grid: &PeriodicGrid) -> usize {
        self.max_iter.unwrap_or_else(|| {
            let half = (grid.side() as f64).powf(grid.dim() as f64 / 2.0);
            (10.0 * half).ceil() as usize
        })
    }
}

/// Solves `(mass - div(edges grad)) x = b`, warm-started from `x`.
/// A zero `mass` selects the mean-zero projected iteration.
pub(crate) fn solve_diffusion(
    grid: &PeriodicGrid,
    edges: &[Vec<f64>],
    mean_coefficient: f64,
    mass: f64,
    b: &[f64],
    x: &mut [f64],
    cfg: &SolverConfig,
) -> Result<super::cg::CgOutcome> {
    let op = DiffusionOperator::new(*grid, edges, mass);
    let pre = build_preconditioner(&cfg.preconditioner, grid, mass, mean_coefficient)?;
    conjugate_gradient(
        &op,
        pre.as_ref(),
        b,
        x,
        cfg.rel_tol,
        cfg.iteration_cap(grid),
        mass == 0.0,
    )
}

/// Gradient or massive corrector for one lattice direction.
#[derive(Debug, Clone)]
pub struct CorrectorSolution {
    pub direction: usize,
    /// `f64::INFINITY` for the steady corrector.
    pub mass_time: f64,
    pub phi: ScalarField,
    /// `a_edge (grad phi + e)`.
    pub flux: VectorField,
    pub residual: f64,
    pub iterations: usize,
}

impl CorrectorSolution {
    pub fn is_steady(&self) -> bool {
        self.mass_time.is_infinite()
    }

    pub fn grad_phi(&self) -> VectorField {
        gradient(&self.phi)
    }
}

/// `div(a_edge e)`.
pub(crate) fn divergence_of_edge_column(
    grid: &PeriodicGrid,
    edges: &[Vec<f64>],
    direction: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    let mut scratch = vec![0.0; grid.len()];
    crate::lattice::accumulate_backward_difference(
        grid,
        &edges[direction],
        &mut out,
        &mut scratch,
        direction,
    );
    out
}

pub(crate) fn assemble_flux(
    edges: &[Vec<f64>],
    phi: &ScalarField,
    direction: usize,
) -> VectorField {
    let grad = gradient(phi);
    let comps = grad
        .into_components()
        .into_iter()
        .enumerate()
        .map(|(axis, mut c)| {
            let shift = if axis == direction { 1.0 } else { 0.0 };
            for (v, a) in c.iter_mut().zip(&edges[axis]) {
                *v = a * (*v + shift);
            }
            c
        })
        .collect();
    VectorField::from_raw(*phi.grid(), comps)
}

fn check_direction(a: &CoefficientField, direction: usize) -> Result<()> {
    if direction >= a.grid().dim() {
        return Err(Error::param(
            "direction",
            format!("axis {direction} outside the grid"),
        ));
    }
    Ok(())
}

fn solve(
    a: &CoefficientField,
    direction: usize,
    mass_time: f64,
    cfg: &SolverConfig,
) -> Result<CorrectorSolution> {
    cfg.validate()?;
    check_direction(a, direction)?;
    let grid = *a.grid();
    let edges = a.edge_coefficients();
    let b = divergence_of_edge_column(&grid, &edges, direction);
    let mass = if mass_time.is_infinite() {
        0.0
    } else {
        1.0 / mass_time
    };
    let mut x = vec![0.0; grid.len()];
    let out = solve_diffusion(&grid, &edges, a.field().mean(), mass, &b, &mut x, cfg)?;
    let phi = ScalarField::from_raw(grid, x);
    let flux = assemble_flux(&edges, &phi, direction);
    Ok(CorrectorSolution {
        direction,
        mass_time,
        phi,
        flux,
        residual: out.residual,
        iterations: out.iterations,
    })
}

/// `(1/T) phi - div(a (grad phi + e)) = 0`.
pub fn solve_massive_corrector(
    a: &CoefficientField,
    direction: usize,
    mass_time: f64,
    cfg: &SolverConfig,
) -> Result<CorrectorSolution> {
    if !(mass_time.is_finite() && mass_time > 0.0) {
        return Err(Error::param(
            "T",
            "massive corrector needs 0 < T < infinity",
        ));
    }
    solve(a, direction, mass_time, cfg)
}

/// `-div(a (grad phi + e)) = 0` on the torus with zero mean gauge.
pub fn solve_steady_corrector(
    a: &CoefficientField,
    direction: usize,
    cfg: &SolverConfig,
) -> Result<CorrectorSolution> {
    solve(a, direction, f64::INFINITY, cfg)
}
