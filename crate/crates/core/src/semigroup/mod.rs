//! Parabolic semigroup generated by `div(a grad)`, the time-dependent flux
//! and corrector it integrates to, and their decay and fluctuation probes.

mod probes;
mod state;
mod time_grid;

pub use probes::{flux_average, h_weighted_flux_average, HWeight};
pub use state::{advance, initial_data, DecayRecord, Semigroup, SemigroupState};
pub use time_grid::TimeGrid;
