use serde::{Deserialize, Serialize};

use super::time_grid::TimeGrid;
use crate::corrector::{divergence_of_edge_column, solve_diffusion, CgOutcome, SolverConfig};
use crate::error::{Error, Result};
use crate::gaussian_field::CoefficientField;
use crate::lattice::{
    accumulate_backward_difference, divergence, forward_difference_into, gradient, window_average,
    KernelSpec, PeriodicGrid, ScalarField, VectorField,
};

/// Solution of `du/dt = div(a grad u)`, `u(0) = div(a e)`, together with
/// the time integrals that turn it into a flux and a corrector.
#[derive(Debug, Clone)]
pub struct SemigroupState {
    pub direction: usize,
    pub t: f64,
    pub u: ScalarField,
    /// Implicit-endpoint quadrature of `int_0^t grad u`.
    pub s_accum: VectorField,
    /// `a_edge (s_accum + e)`.
    pub flux: VectorField,
    /// Implicit-endpoint quadrature of `int_0^t u`.
    pub phi_t: ScalarField,
}

impl SemigroupState {
    pub fn grad_u(&self) -> VectorField {
        gradient(&self.u)
    }

    /// `max |u - div(flux)|`, zero up to rounding.
    pub fn conservation_defect(&self) -> f64 {
        self.u.sub(&divergence(&self.flux)).max_abs()
    }
}

/// `div(a_edge e)` for the lattice direction `direction`.
pub fn initial_data(a: &CoefficientField, direction: usize) -> ScalarField {
    let edges = a.edge_coefficients();
    ScalarField::from_raw(
        *a.grid(),
        divergence_of_edge_column(a.grid(), &edges, direction),
    )
}

/// Time stepper bound to one coefficient sample.
pub struct Semigroup<'a> {
    a: &'a CoefficientField,
    edges: Vec<Vec<f64>>,
    mean_a: f64,
    cfg: SolverConfig,
}

impl<'a> Semigroup<'a> {
    pub fn new(a: &'a CoefficientField, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            a,
            edges: a.edge_coefficients(),
            mean_a: a.field().mean(),
            cfg: cfg.clone(),
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.a.grid()
    }

    pub fn initial_state(&self, direction: usize) -> Result<SemigroupState> {
        let grid = *self.grid();
        if direction >= grid.dim() {
            return Err(Error::param(
                "direction",
                format!("axis {direction} outside the grid"),
            ));
        }
        let u = ScalarField::from_raw(
            grid,
            divergence_of_edge_column(&grid, &self.edges, direction),
        );
        let s_accum = VectorField::zeros(grid);
        let flux = self.flux_from(&s_accum, direction);
        Ok(SemigroupState {
            direction,
            t: 0.0,
            u,
            s_accum,
            flux,
            phi_t: ScalarField::zeros(grid),
        })
    }

    fn flux_from(&self, s: &VectorField, direction: usize) -> VectorField {
        let comps = s
            .components()
            .iter()
            .zip(&self.edges)
            .enumerate()
            .map(|(axis, (c, a))| {
                let shift = if axis == direction { 1.0 } else { 0.0 };
                c.iter().zip(a).map(|(v, e)| e * (v + shift)).collect()
            })
            .collect();
        VectorField::from_raw(*s.grid(), comps)
    }

    /// One implicit Euler step. `w = (1 + dt A)^(-1) u` is computed by CG;
    /// the new state is then `u - dt A w`, `s += dt grad w`, `phi += dt w`,
    /// so that `u = div(flux)` holds up to rounding whatever the CG accuracy.
    pub fn advance(&self, state: &mut SemigroupState, dt: f64) -> Result<CgOutcome> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "time step must be positive"));
        }
        let grid = *self.grid();
        let mass = 1.0 / dt;
        let b: Vec<f64> = state.u.values().iter().map(|v| v * mass).collect();
        let mut w = state.u.values().to_vec();
        let outcome =
            solve_diffusion(&grid, &self.edges, self.mean_a, mass, &b, &mut w, &self.cfg)?;

        let mut grad = vec![0.0; grid.len()];
        let mut scratch = vec![0.0; grid.len()];
        let mut div = vec![0.0; grid.len()];
        for axis in 0..grid.dim() {
            forward_difference_into(&grid, &w, &mut grad, axis);
            for (s, g) in state.s_accum.component_mut(axis).iter_mut().zip(&grad) {
                *s += dt * g;
            }
            for (g, e) in grad.iter_mut().zip(&self.edges[axis]) {
                *g *= e;
            }
            accumulate_backward_difference(&grid, &grad, &mut div, &mut scratch, axis);
        }
        for (u, dv) in state.u.values_mut().iter_mut().zip(&div) {
            *u += dt * dv;
        }
        for (p, wv) in state.phi_t.values_mut().iter_mut().zip(&w) {
            *p += dt * wv;
        }
        state.flux = self.flux_from(&state.s_accum, state.direction);
        state.t += dt;
        Ok(outcome)
    }

    /// Steps through `time_grid`, calling `observer(state, dt, is_probe)`
    /// after every step.
    pub fn step_through(
        &self,
        direction: usize,
        time_grid: &TimeGrid,
        probes: &[f64],
        mut observer: impl FnMut(&SemigroupState, f64, bool) -> Result<()>,
    ) -> Result<SemigroupState> {
        let nodes = time_grid.nodes(probes)?;
        let mut state = self.initial_state(direction)?;
        let mut prev = 0.0;
        for &t in &nodes {
            self.advance(&mut state, t - prev)?;
            state.t = t;
            let is_probe = probes.contains(&t);
            observer(&state, t - prev, is_probe)?;
            prev = t;
        }
        Ok(state)
    }

    /// `sum_k dt_k exp(-t_k / T) grad u(t_k)` over the nodes of
    /// `time_grid`, the discrete Laplace transform whose limit is the
    /// gradient of the massive corrector with mass `1/T`.
    pub fn laplace_gradient(
        &self,
        direction: usize,
        mass_time: f64,
        time_grid: &TimeGrid,
    ) -> Result<VectorField> {
        if !(mass_time > 0.0 && mass_time.is_finite()) {
            return Err(Error::param(
                "T",
                "Laplace transform needs 0 < T < infinity",
            ));
        }
        let mut acc = VectorField::zeros(*self.grid());
        self.step_through(direction, time_grid, &[], |state, dt, _| {
            let w = dt * (-state.t / mass_time).exp();
            let g = state.grad_u();
            for (axis, c) in g.components().iter().enumerate() {
                for (x, v) in acc.component_mut(axis).iter_mut().zip(c) {
                    *x += w * v;
                }
            }
            Ok(())
        })?;
        Ok(acc)
    }

    /// Runs to the final time and records decay statistics at every probe;
    /// `on_probe` sees the state at each probe time.
    pub fn run(
        &self,
        direction: usize,
        time_grid: &TimeGrid,
        probes: &[f64],
        mut on_probe: impl FnMut(&SemigroupState) -> Result<()>,
    ) -> Result<DecayRecord> {
        let limit = self.grid().probe_limit();
        for &p in probes {
            if p.sqrt() > limit {
                return Err(Error::ScaleGuard(format!(
                    "sqrt(t) = {} exceeds n/8 = {limit}",
                    p.sqrt()
                )));
            }
        }
        let mut record = DecayRecord::default();
        self.step_through(direction, time_grid, probes, |state, _, is_probe| {
            if is_probe {
                let defect = state.conservation_defect();
                let scale = state.flux.rms().max(1.0);
                if defect > 1e-10 * scale {
                    return Err(Error::param(
                        "conservation",
                        format!("u - div(q) = {defect:.3e} at t = {}", state.t),
                    ));
                }
                record.push(state)?;
                on_probe(state)?;
            }
            Ok(())
        })?;
        Ok(record)
    }
}

/// Free-function form of [`Semigroup::advance`].
pub fn advance(
    state: &mut SemigroupState,
    dt: f64,
    a: &CoefficientField,
    cfg: &SolverConfig,
) -> Result<CgOutcome> {
    Semigroup::new(a, cfg)?.advance(state, dt)
}

/// Spatial decay statistics at the probe times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub times: Vec<f64>,
    pub mean_u2: Vec<f64>,
    pub mean_grad_u2: Vec<f64>,
    /// `eta_R` weighted averages at the origin with `R = sqrt(t)`.
    pub weighted_u2: Vec<f64>,
    pub weighted_grad_u2: Vec<f64>,
}

impl DecayRecord {
    fn push(&mut self, state: &SemigroupState) -> Result<()> {
        let u2 = state.u.map(|v| v * v);
        let g2 = state.grad_u().squared_magnitude();
        let eta = KernelSpec::exponential(state.t.sqrt())?;
        self.times.push(state.t);
        self.mean_u2.push(u2.mean());
        self.mean_grad_u2.push(g2.mean());
        self.weighted_u2.push(window_average(&u2, &eta, 0)?);
        self.weighted_grad_u2.push(window_average(&g2, &eta, 0)?);
        Ok(())
    }

    pub fn at(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }
}
