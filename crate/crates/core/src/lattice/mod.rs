//! Periodic unit lattice, fields on it, discrete calculus and kernels.

mod field;
mod grid;
pub mod io;
mod kernel;
pub mod spectral;

pub(crate) use field::{accumulate_backward_difference, dot, forward_difference_into};
pub use field::{divergence, gradient, laplacian, ScalarField, VectorField};
pub(crate) use grid::shift_into;
pub use grid::PeriodicGrid;
pub use kernel::{
    convolve, convolve_vector, integrated_heat_profile, window_average, window_average_vector,
    KernelKind, KernelSpec, HEAT_NODES_PER_LOG_UNIT,
};
pub use spectral::Spectral;
