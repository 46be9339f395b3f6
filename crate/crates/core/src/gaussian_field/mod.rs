//! Stationary Gaussian fields with algebraic covariance and the coefficient
//! fields built from them.

mod coefficient;
mod density;

use std::sync::Arc;

pub use coefficient::{
    apply_coefficient_map, centred_perturbation, coefficient_map_names, small_contrast_field,
    small_contrast_from_perturbation, CoefficientField, CoefficientMap, CoefficientMapSpec,
    Logistic, LognormalClamped,
};
pub use density::{
    sample_gaussian, spectral_density, CovarianceSpec, SampleSeed, SpectralDensity, CLAMP_BUDGET,
};

use crate::error::Result;
use crate::lattice::{PeriodicGrid, ScalarField};

/// A covariance realized on a grid together with a coefficient map; the
/// density is computed once and shared by every sample.
#[derive(Debug, Clone)]
pub struct CoefficientModel {
    density: Arc<SpectralDensity>,
    map: Arc<dyn CoefficientMap>,
}

impl CoefficientModel {
    pub fn new(
        grid: &PeriodicGrid,
        covariance: &CovarianceSpec,
        map: &CoefficientMapSpec,
    ) -> Result<Self> {
        Ok(Self {
            density: Arc::new(spectral_density(covariance, grid)?),
            map: Arc::from(map.build()?),
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.density.grid()
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn map(&self) -> &dyn CoefficientMap {
        self.map.as_ref()
    }

    pub fn gaussian(&self, seed: SampleSeed) -> ScalarField {
        sample_gaussian(&self.density, seed)
    }

    pub fn sample(&self, seed: SampleSeed) -> Result<CoefficientField> {
        apply_coefficient_map(&self.gaussian(seed), self.map.as_ref())
    }
}
