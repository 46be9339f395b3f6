use super::state::SemigroupState;
use crate::error::{Error, Result};
use crate::lattice::{
    dot, forward_difference_into, integrated_heat_profile, window_average_vector, KernelSpec,
    PeriodicGrid, HEAT_NODES_PER_LOG_UNIT,
};

/// Tolerance used when matching `t = r^2`.
const TIME_MATCH: f64 = 1e-9;

/// `(q(t) * g_r)(0)` for `1 <= r <= sqrt(t) <= n/8`.
pub fn flux_average(state: &SemigroupState, r: f64) -> Result<Vec<f64>> {
    let grid = state.flux.grid();
    let limit = grid.probe_limit();
    let root_t = state.t.sqrt();
    if !(r >= 1.0) {
        return Err(Error::ScaleGuard(format!("averaging radius {r} below 1")));
    }
    if r > root_t * (1.0 + TIME_MATCH) {
        return Err(Error::ScaleGuard(format!(
            "radius {r} exceeds sqrt(t) = {root_t}"
        )));
    }
    if root_t > limit {
        return Err(Error::ScaleGuard(format!(
            "sqrt(t) = {root_t} exceeds n/8 = {limit}"
        )));
    }
    window_average_vector(&state.flux, &KernelSpec::gaussian(r)?, 0)
}

/// Test function `f_r = grad H` with `H = int_1^{r^2} g_sqrt(tau) dtau`,
/// precomputed once per `(grid, r)`.
#[derive(Debug, Clone)]
pub struct HWeight {
    r: f64,
    grid: PeriodicGrid,
    profile: Vec<f64>,
    gradient: Vec<Vec<f64>>,
}

impl HWeight {
    pub fn new(grid: &PeriodicGrid, r: f64) -> Result<Self> {
        Self::with_nodes(grid, r, HEAT_NODES_PER_LOG_UNIT)
    }

    pub fn with_nodes(grid: &PeriodicGrid, r: f64, nodes_per_log_unit: usize) -> Result<Self> {
        let limit = grid.side() as f64 / 16.0;
        if !(1.0..=limit).contains(&r) {
            return Err(Error::ScaleGuard(format!(
                "h-weight radius {r} outside [1, n/16 = {limit}]"
            )));
        }
        let profile = integrated_heat_profile(grid, r, nodes_per_log_unit);
        let gradient = (0..grid.dim())
            .map(|axis| {
                let mut g = vec![0.0; grid.len()];
                forward_difference_into(grid, &profile, &mut g, axis);
                g
            })
            .collect();
        Ok(Self {
            r,
            grid: *grid,
            profile,
            gradient,
        })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn gradient(&self) -> &[Vec<f64>] {
        &self.gradient
    }

    /// `|f_r(x)|` at every site (Euclidean norm over the edge components).
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                self.gradient
                    .iter()
                    .map(|c| c[i] * c[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Smallest `C` with `|f_r(x)| <= C min(r / (|x|+1)^d, (|x|+1)^(1-d))`.
    pub fn envelope_constant(&self) -> f64 {
        let d = self.grid.dim() as i32;
        self.magnitude()
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let rho = self.grid.distance_from_origin(i) + 1.0;
                let bound = (self.r / rho.powi(d)).min(rho.powi(1 - d));
                m / bound
            })
            .fold(0.0, f64::max)
    }

    /// Componentwise pairing `sum_y q_i(y) f_{r,i}(y)`; the scalar
    /// `q(r^2) * f_r` is the sum of the entries.
    pub fn average(&self, state: &SemigroupState) -> Result<Vec<f64>> {
        if *state.flux.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let t = self.r * self.r;
        if (state.t - t).abs() > TIME_MATCH * t {
            return Err(Error::ScaleGuard(format!(
                "h-weighted average needs t = r^2 = {t}, state is at t = {}",
                state.t
            )));
        }
        Ok(state
            .flux
            .components()
            .iter()
            .zip(&self.gradient)
            .map(|(q, f)| dot(q, f))
            .collect())
    }
}

/// One-shot form of [`HWeight::average`].
pub fn h_weighted_flux_average(state: &SemigroupState, r: f64) -> Result<Vec<f64>> {
    HWeight::new(state.flux.grid(), r)?.average(state)
}
