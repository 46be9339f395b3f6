//! Averaging kernels sampled on the lattice and periodic convolution.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{dot, ScalarField, VectorField};
use super::grid::PeriodicGrid;
use super::spectral::Spectral;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `exp(-|x|^2 / r^2)`
    Gaussian,
    /// `exp(-|x| / r)`
    Exponential,
    /// `int_1^{r^2} g_sqrt(tau) dtau`, see [`integrated_heat_profile`].
    IntegratedHeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub scale: f64,
}

/// Geometric nodes per unit of `ln(tau)` in the integrated heat quadrature.
pub const HEAT_NODES_PER_LOG_UNIT: usize = 48;

impl KernelSpec {
    pub fn new(kind: KernelKind, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param(
                "scale",
                format!("must be positive, got {scale}"),
            ));
        }
        Ok(Self { kind, scale })
    }

    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian, scale)
    }

    pub fn exponential(scale: f64) -> Result<Self> {
        Self::new(KernelKind::Exponential, scale)
    }

    pub fn check_guard(&self, grid: &PeriodicGrid) -> Result<()> {
        let limit = grid.probe_limit();
        if self.scale > limit {
            return Err(Error::ScaleTooLarge {
                scale: self.scale,
                limit,
            });
        }
        Ok(())
    }

    /// Unit-mass kernel centred at the origin, indexed like a field.
    pub fn sample(&self, grid: &PeriodicGrid) -> Result<Vec<f64>> {
        self.check_guard(grid)?;
        Ok(self.sample_centered(grid, 0))
    }

    fn sample_centered(&self, grid: &PeriodicGrid, center: usize) -> Vec<f64> {
        let r2 = grid.squared_distances_from(center);
        let mut k: Vec<f64> = match self.kind {
            KernelKind::Gaussian => {
                let s = self.scale * self.scale;
                r2.iter().map(|&d| (-d / s).exp()).collect()
            }
            KernelKind::Exponential => r2.iter().map(|&d| (-d.sqrt() / self.scale).exp()).collect(),
            KernelKind::IntegratedHeat => {
                integrated_heat_from_distances(&r2, self.scale, HEAT_NODES_PER_LOG_UNIT)
            }
        };
        let mass: f64 = k.iter().sum();
        for v in &mut k {
            *v /= mass;
        }
        k
    }
}

/// `H(x) = int_1^{r^2} g_sqrt(tau)(x) dtau` with each `g` of unit discrete
/// mass, by the trapezoidal rule in `ln(tau)` on geometric nodes.
pub fn integrated_heat_profile(grid: &PeriodicGrid, r: f64, nodes_per_log_unit: usize) -> Vec<f64> {
    let r2 = grid.squared_distances_from(0);
    integrated_heat_from_distances(&r2, r, nodes_per_log_unit)
}

fn integrated_heat_from_distances(r2: &[f64], r: f64, nodes_per_log_unit: usize) -> Vec<f64> {
    let upper = (r * r).ln();
    let mut out = vec![0.0; r2.len()];
    if upper <= 0.0 {
        return out;
    }
    let intervals = ((upper * nodes_per_log_unit as f64).ceil() as usize).max(1);
    let h = upper / intervals as f64;
    let mut g = vec![0.0; r2.len()];
    for j in 0..=intervals {
        let tau = (j as f64 * h).exp();
        let mut mass = 0.0;
        for (gv, &d) in g.iter_mut().zip(r2) {
            *gv = (-d / tau).exp();
            mass += *gv;
        }
        // d tau = tau d(ln tau)
        let w = if j == 0 || j == intervals { 0.5 * h } else { h } * tau / mass;
        for (o, gv) in out.iter_mut().zip(&g) {
            *o += w * gv;
        }
    }
    out
}

fn kernel_hat(
    grid: &PeriodicGrid,
    k: &KernelSpec,
) -> Result<(std::sync::Arc<Spectral>, Vec<Complex64>)> {
    let profile = k.sample(grid)?;
    let sp = Spectral::for_grid(grid);
    let hat = sp.forward_real(&profile);
    Ok((sp, hat))
}

fn convolve_with(sp: &Spectral, hat: &[Complex64], values: &[f64]) -> Vec<f64> {
    let mut f = sp.forward_real(values);
    for (a, b) in f.iter_mut().zip(hat) {
        *a *= b;
    }
    sp.inverse_real(f)
}

/// Periodic convolution `(f * k)(x) = sum_y k(x - y) f(y)`.
pub fn convolve(f: &ScalarField, k: &KernelSpec) -> Result<ScalarField> {
    let (sp, hat) = kernel_hat(f.grid(), k)?;
    Ok(ScalarField::from_raw(
        *f.grid(),
        convolve_with(&sp, &hat, f.values()),
    ))
}

pub fn convolve_vector(v: &VectorField, k: &KernelSpec) -> Result<VectorField> {
    let (sp, hat) = kernel_hat(v.grid(), k)?;
    let comps = v
        .components()
        .iter()
        .map(|c| convolve_with(&sp, &hat, c))
        .collect();
    Ok(VectorField::from_raw(*v.grid(), comps))
}

/// `sum_y k(y - x) f(y)` at a single site, by direct summation.
pub fn window_average(f: &ScalarField, k: &KernelSpec, site: usize) -> Result<f64> {
    k.check_guard(f.grid())?;
    let w = k.sample_centered(f.grid(), site);
    Ok(dot(&w, f.values()))
}

pub fn window_average_vector(v: &VectorField, k: &KernelSpec, site: usize) -> Result<Vec<f64>> {
    k.check_guard(v.grid())?;
    let w = k.sample_centered(v.grid(), site);
    Ok(v.components().iter().map(|c| dot(&w, c)).collect())
}
