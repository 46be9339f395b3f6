//! Steady and massive correctors, fluxes, flux correctors and cell
//! estimates of the effective coefficient.

mod cg;
mod flux_corrector;
mod homogenized;
mod solve;

pub use cg::{
    build_preconditioner, conjugate_gradient, preconditioner_names, CgOutcome, DiffusionOperator,
    LinearOperator, NoPreconditioner, Preconditioner, SpectralPreconditioner,
};
pub use flux_corrector::{solve_flux_corrector, FluxCorrector};
pub use homogenized::{
    rve_homogenized_matrix, symmetric_eigenvalues, HomogenizedEstimate, Provenance,
};
pub(crate) use solve::{divergence_of_edge_column, solve_diffusion};
pub use solve::{solve_massive_corrector, solve_steady_corrector, CorrectorSolution, SolverConfig};

use crate::error::Result;
use crate::gaussian_field::{CoefficientField, SampleSeed};

/// Steady correctors for every direction and the resulting cell estimate.
pub fn steady_rve(
    a: &CoefficientField,
    cfg: &SolverConfig,
    seeds: Vec<SampleSeed>,
) -> Result<(Vec<CorrectorSolution>, HomogenizedEstimate)> {
    let sols = (0..a.grid().dim())
        .map(|i| solve_steady_corrector(a, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    let est = rve_homogenized_matrix(&sols, seeds)?;
    Ok((sols, est))
}
