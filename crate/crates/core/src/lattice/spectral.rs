//! Discrete Fourier transforms on the periodic lattice and the Fourier
//! symbols of the lattice difference operators.
//!
//! Conventions: `f_hat(k) = sum_x f(x) e^{-2 pi i k.x/n}` and the inverse
//! carries the `1/N` factor. With `w_i(k) = e^{2 pi i k_i / n}` the forward
//! difference along axis `i` has symbol `w_i - 1`, the backward difference
//! `1 - conj(w_i)`, and the negative Laplacian `lambda(k) = sum_i |w_i - 1|^2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::PeriodicGrid;

pub struct Spectral {
    grid: PeriodicGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    neg_laplacian: Vec<f64>,
    forward_symbols: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

fn cache() -> &'static Mutex<HashMap<PeriodicGrid, Arc<Spectral>>> {
    static CACHE: OnceLock<Mutex<HashMap<PeriodicGrid, Arc<Spectral>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Spectral {
    /// Shared transform context for `grid`; plans and symbols are built once.
    pub fn for_grid(grid: &PeriodicGrid) -> Arc<Spectral> {
        let mut map = cache().lock().expect("spectral cache poisoned");
        map.entry(*grid)
            .or_insert_with(|| Arc::new(Spectral::build(*grid)))
            .clone()
    }

    fn build(grid: PeriodicGrid) -> Self {
        let n = grid.side();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let phases: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let len = grid.len();
        let mut forward_symbols = vec![vec![Complex64::default(); len]; grid.dim()];
        let mut neg_laplacian = vec![0.0; len];
        for m in 0..len {
            let c = grid.coords(m);
            for axis in 0..grid.dim() {
                let s = phases[c[axis]] - 1.0;
                forward_symbols[axis][m] = s;
                neg_laplacian[m] += s.norm_sqr();
            }
        }
        Self {
            grid,
            forward,
            inverse,
            neg_laplacian,
            forward_symbols,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// `lambda(k) >= 0`, symbol of `-divergence(gradient(.))`.
    pub fn neg_laplacian(&self) -> &[f64] {
        &self.neg_laplacian
    }

    /// `w_axis(k) - 1` for every mode.
    pub fn forward_symbol(&self, axis: usize) -> &[Complex64] {
        &self.forward_symbols[axis]
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    /// Transforms two real arrays with a single complex transform.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut data: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.transform(&mut data, false);
        let len = data.len();
        let mut fa = vec![Complex64::default(); len];
        let mut fb = vec![Complex64::default(); len];
        for m in 0..len {
            let z = data[m];
            let zc = data[self.negated_mode(m)].conj();
            fa[m] = (z + zc) * 0.5;
            fb[m] = (z - zc) * Complex64::new(0.0, -0.5);
        }
        (fa, fb)
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Normalized inverse transform, in place.
    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// Normalized inverse transform returning the real part.
    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.inverse_in_place(&mut data);
        data.into_iter().map(|z| z.re).collect()
    }

    /// Index of the mode `-k`.
    pub fn negated_mode(&self, m: usize) -> usize {
        let n = self.grid.side();
        let c = self.grid.coords(m);
        let d = self.grid.dim();
        let mut neg = [0usize; 3];
        for a in 0..d {
            neg[a] = (n - c[a]) % n;
        }
        self.grid.index(&neg[..d])
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.grid.len());
        let plan = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        let n = self.grid.side();
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        if self.grid.dim() == 1 {
            return;
        }
        let mut line = vec![Complex64::default(); n * self.grid.stride(0)];
        for axis in 0..self.grid.dim() - 1 {
            let s = self.grid.stride(axis);
            let block = n * s;
            let t = &mut line[..block];
            for b in data.chunks_exact_mut(block) {
                for r in 0..n {
                    let row = &b[r * s..(r + 1) * s];
                    for (c, v) in row.iter().enumerate() {
                        t[c * n + r] = *v;
                    }
                }
                plan.process_with_scratch(t, &mut scratch);
                for r in 0..n {
                    let row = &mut b[r * s..(r + 1) * s];
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = t[c * n + r];
                    }
                }
            }
        }
    }
}
