pub mod error;
pub mod lattice;

pub use error::{Error, Result};
pub mod corrector;
pub mod extrapolation;
pub mod gaussian_field;
pub mod semigroup;
pub mod smallcontrast;
pub mod stats;
pub mod two_scale;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
