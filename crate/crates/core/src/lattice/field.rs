use super::grid::{shift_into, PeriodicGrid};
use crate::error::{Error, Result};

/// One real value per lattice site.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

/// Edge-based vector field: component `i` at site `x` lives on the edge
/// from `x` to `x + e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: PeriodicGrid,
    components: Vec<Vec<f64>>,
}

impl ScalarField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(
                "values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("non-finite entry {v}")));
        }
        Ok(Self { grid, values })
    }

    /// Builds a field from a function of the site coordinates.
    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut([usize; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, coords: &[usize]) -> f64 {
        self.values[self.grid.index(coords)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }

    /// Root mean square over sites.
    pub fn rms(&self) -> f64 {
        (dot(&self.values, &self.values) / self.values.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn inner(&self, other: &ScalarField) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Copy with the mean removed.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// `g(x) = f(x + offset)` with periodic wrap.
    pub fn translated(&self, offset: &[i64]) -> Self {
        let d = self.grid.dim();
        let values = (0..self.grid.len())
            .map(|i| {
                let c = self.grid.coords(i);
                let mut s = [0i64; 3];
                for a in 0..d {
                    s[a] = c[a] as i64 + offset[a];
                }
                self.values[self.grid.index_wrapped(&s[..d])]
            })
            .collect();
        Self::from_raw(self.grid, values)
    }
}

impl VectorField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            components: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    /// Constant field equal to `v` on every edge.
    pub fn constant(grid: PeriodicGrid, v: &[f64]) -> Self {
        assert_eq!(v.len(), grid.dim());
        Self {
            grid,
            components: v.iter().map(|&c| vec![c; grid.len()]).collect(),
        }
    }

    pub fn from_components(grid: PeriodicGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::param(
                "components",
                format!(
                    "expected {} components, got {}",
                    grid.dim(),
                    components.len()
                ),
            ));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::param("components", "component length mismatch"));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("components", "non-finite entry"));
            }
        }
        Ok(Self { grid, components })
    }

    pub(crate) fn from_raw(grid: PeriodicGrid, components: Vec<Vec<f64>>) -> Self {
        Self { grid, components }
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i]
    }

    #[inline]
    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    pub fn component_field(&self, i: usize) -> ScalarField {
        ScalarField::from_raw(self.grid, self.components[i].clone())
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.grid.len() as f64;
        self.components
            .iter()
            .map(|c| c.iter().sum::<f64>() / n)
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| dot(c, c))
            .sum::<f64>()
            .sqrt()
    }

    /// Root mean square of `|v|` over sites.
    pub fn rms(&self) -> f64 {
        self.norm() / (self.grid.len() as f64).sqrt()
    }

    pub fn inner(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| dot(a, b))
            .sum()
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Self::from_raw(self.grid, components)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|a| a.iter().map(|x| c * x).collect())
            .collect();
        Self::from_raw(self.grid, components)
    }

    /// Sitewise squared magnitude `|v(x)|^2`.
    pub fn squared_magnitude(&self) -> ScalarField {
        let mut out = vec![0.0; self.grid.len()];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        ScalarField::from_raw(self.grid, out)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators keep the reduction vectorizable and deterministic.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * k + l] * b[4 * k + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Forward differences: component `i` is `f(x + e_i) - f(x)`.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let components = (0..grid.dim())
        .map(|axis| {
            let mut c = vec![0.0; grid.len()];
            forward_difference_into(&grid, f.values(), &mut c, axis);
            c
        })
        .collect();
    VectorField::from_raw(grid, components)
}

/// Negative adjoint of [`gradient`]: `sum_i v_i(x) - v_i(x - e_i)`.
pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = *v.grid();
    let mut out = vec![0.0; grid.len()];
    let mut shifted = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        accumulate_backward_difference(&grid, v.component(axis), &mut out, &mut shifted, axis);
    }
    ScalarField::from_raw(grid, out)
}

/// The standard `2d + 1` point Laplacian, equal to `divergence(gradient(f))`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let d = grid.dim() as f64;
    let mut out: Vec<f64> = f.values().iter().map(|v| -2.0 * d * v).collect();
    let mut shifted = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        for dir in [-1, 1] {
            shift_into(&grid, f.values(), &mut shifted, axis, dir);
            for (o, s) in out.iter_mut().zip(&shifted) {
                *o += s;
            }
        }
    }
    ScalarField::from_raw(grid, out)
}

pub(crate) fn forward_difference_into(
    grid: &PeriodicGrid,
    f: &[f64],
    out: &mut [f64],
    axis: usize,
) {
    shift_into(grid, f, out, axis, 1);
    for (o, v) in out.iter_mut().zip(f) {
        *o -= v;
    }
}

/// `out += v(x) - v(x - e_axis)`; `scratch` is overwritten.
pub(crate) fn accumulate_backward_difference(
    grid: &PeriodicGrid,
    v: &[f64],
    out: &mut [f64],
    scratch: &mut [f64],
    axis: usize,
) {
    shift_into(grid, v, scratch, axis, -1);
    for ((o, a), b) in out.iter_mut().zip(v).zip(scratch.iter()) {
        *o += a - b;
    }
}
