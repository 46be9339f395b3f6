//! Preconditioned conjugate gradients for the symmetric positive (semi)
//! definite lattice operators `m - div(a grad)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{
    accumulate_backward_difference, dot, forward_difference_into, PeriodicGrid, Spectral,
};

pub trait LinearOperator: Sync {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

pub trait Preconditioner: Send + Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, r: &[f64], out: &mut [f64]);
}

/// `mass * x - div(edge * grad x)` with per-axis edge coefficients.
pub struct DiffusionOperator<'a> {
    grid: PeriodicGrid,
    edges: &'a [Vec<f64>],
    mass: f64,
    scratch: std::sync::Mutex<(Vec<f64>, Vec<f64>)>,
}

impl<'a> DiffusionOperator<'a> {
    pub fn new(grid: PeriodicGrid, edges: &'a [Vec<f64>], mass: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            edges,
            mass,
            scratch: std::sync::Mutex::new((vec![0.0; n], vec![0.0; n])),
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl LinearOperator for DiffusionOperator<'_> {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut guard = self.scratch.lock().expect("operator scratch poisoned");
        let (flux, shifted) = &mut *guard;
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.mass * v;
        }
        for axis in 0..self.grid.dim() {
            forward_difference_into(&self.grid, x, flux, axis);
            for (f, a) in flux.iter_mut().zip(&self.edges[axis]) {
                *f = -*f * a;
            }
            accumulate_backward_difference(&self.grid, flux, out, shifted, axis);
        }
    }
}

#[derive(Debug, Default)]
pub struct NoPreconditioner;

impl Preconditioner for NoPreconditioner {
    fn name(&self) -> &'static str {
        "none"
    }

    fn apply(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
    }
}

/// Exact inverse of the constant-coefficient operator `mass - a0 Laplacian`;
/// on the singular zero mode it returns zero.
pub struct SpectralPreconditioner {
    spectral: Arc<Spectral>,
    inverse_symbol: Vec<f64>,
}

impl SpectralPreconditioner {
    pub fn new(grid: &PeriodicGrid, mass: f64, diffusivity: f64) -> Self {
        let spectral = Spectral::for_grid(grid);
        let inverse_symbol = spectral
            .neg_laplacian()
            .iter()
            .map(|&l| {
                let s = mass + diffusivity * l;
                if s > 0.0 {
                    1.0 / s
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            spectral,
            inverse_symbol,
        }
    }
}

impl Preconditioner for SpectralPreconditioner {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn apply(&self, r: &[f64], out: &mut [f64]) {
        let mut data: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.spectral.forward_in_place(&mut data);
        for (z, s) in data.iter_mut().zip(&self.inverse_symbol) {
            *z *= s;
        }
        self.spectral.inverse_in_place(&mut data);
        for (o, z) in out.iter_mut().zip(&data) {
            *o = z.re;
        }
    }
}

type PreconditionerFactory = fn(&PeriodicGrid, f64, f64) -> Box<dyn Preconditioner>;

const PRECONDITIONERS: &[(&str, PreconditionerFactory)] = &[
    ("none", |_, _, _| Box::new(NoPreconditioner)),
    ("spectral", |g, m, a| {
        Box::new(SpectralPreconditioner::new(g, m, a))
    }),
];

pub fn preconditioner_names() -> impl Iterator<Item = &'static str> {
    PRECONDITIONERS.iter().map(|(n, _)| *n)
}

/// Looks up a preconditioner by name for the operator `mass - div(a grad)`
/// whose coefficient averages to `mean_coefficient`.
pub fn build_preconditioner(
    name: &str,
    grid: &PeriodicGrid,
    mass: f64,
    mean_coefficient: f64,
) -> Result<Box<dyn Preconditioner>> {
    PRECONDITIONERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f(grid, mass, mean_coefficient))
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "preconditioner",
            name: name.to_string(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// `|b - A x| / |b|`, recomputed from scratch at exit.
    pub residual: f64,
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v {
        *x -= m;
    }
}

/// Solves `A x = b` starting from the contents of `x`.
///
/// With `project` set the iteration is confined to mean-zero vectors, which
/// makes the singular steady operator solvable; `b` must then have zero mean.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    pre: &dyn Preconditioner,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    project: bool,
) -> Result<CgOutcome> {
    let n = op.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    if project {
        remove_mean(x);
    }
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    op.apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    if project {
        remove_mean(&mut r);
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    if project {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let target = rel_tol * b_norm;
    let mut iterations = 0;
    let mut r_norm = dot(&r, &r).sqrt();
    while r_norm > target {
        if iterations == max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: r_norm / b_norm,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if project {
            remove_mean(&mut r);
        }
        pre.apply(&r, &mut z);
        if project {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
        r_norm = dot(&r, &r).sqrt();
    }
    if project {
        remove_mean(x);
    }
    op.apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let residual = dot(&r, &r).sqrt() / b_norm;
    if residual > 10.0 * rel_tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(CgOutcome {
        iterations,
        residual,
    })
}
