use num_complex::Complex64;

use crate::lattice::{ScalarField, Spectral, VectorField};

/// Skew-symmetric potential of a flux: `sigma[j][k] = -sigma[k][j]`.
#[derive(Debug, Clone)]
pub struct FluxCorrector {
    /// `f64::INFINITY` for the steady flux corrector.
    pub mass_time: f64,
    dim: usize,
    entries: Vec<ScalarField>,
}

impl FluxCorrector {
    pub fn entry(&self, j: usize, k: usize) -> &ScalarField {
        &self.entries[j * self.dim + k]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-wise divergence: component `j` is `sum_k backward_k sigma[j][k]`.
    pub fn divergence(&self) -> VectorField {
        let grid = *self.entries[0].grid();
        let mut comps = vec![vec![0.0; grid.len()]; self.dim];
        let mut scratch = vec![0.0; grid.len()];
        for (j, c) in comps.iter_mut().enumerate() {
            for k in 0..self.dim {
                crate::lattice::accumulate_backward_difference(
                    &grid,
                    self.entry(j, k).values(),
                    c,
                    &mut scratch,
                    k,
                );
            }
        }
        VectorField::from_raw(grid, comps)
    }
}

/// Solves `(1/T - Laplacian) sigma_jk = forward_j q_k - forward_k q_j`
/// exactly in Fourier space; the steady case (`T = inf`) drops the zero mode.
pub fn solve_flux_corrector(q: &VectorField, mass_time: f64) -> FluxCorrector {
    let grid = *q.grid();
    let d = grid.dim();
    let sp = Spectral::for_grid(&grid);
    let mass = if mass_time.is_infinite() {
        0.0
    } else {
        1.0 / mass_time
    };
    let hats: Vec<Vec<Complex64>> = q.components().iter().map(|c| sp.forward_real(c)).collect();
    let lam = sp.neg_laplacian();
    let zero = ScalarField::zeros(grid);
    let mut entries = vec![zero; d * d];
    for j in 0..d {
        for k in j + 1..d {
            let (wj, wk) = (sp.forward_symbol(j), sp.forward_symbol(k));
            let spec: Vec<Complex64> = (0..grid.len())
                .map(|m| {
                    let s = mass + lam[m];
                    if s > 0.0 {
                        (wj[m] * hats[k][m] - wk[m] * hats[j][m]) / s
                    } else {
                        Complex64::default()
                    }
                })
                .collect();
            let sigma = ScalarField::from_raw(grid, sp.inverse_real(spec));
            entries[k * d + j] = sigma.scaled(-1.0);
            entries[j * d + k] = sigma;
        }
    }
    FluxCorrector {
        mass_time,
        dim: d,
        entries,
    }
}
