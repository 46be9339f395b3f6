use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{PeriodicGrid, ScalarField, Spectral};

/// Fraction of spectral mass that may be clamped away before the torus is
/// declared too small for the requested covariance.
pub const CLAMP_BUDGET: f64 = 0.01;

/// Stationary covariance `c(x) = (|x| + 1)^(-beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    pub beta: f64,
    #[serde(default = "one")]
    pub components: usize,
}

fn one() -> usize {
    1
}

impl CovarianceSpec {
    pub fn new(beta: f64) -> Result<Self> {
        let spec = Self {
            beta,
            components: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::param("beta", "beta must be positive"));
        }
        if self.components != 1 {
            return Err(Error::param(
                "components",
                "only scalar fields (k = 1) are supported",
            ));
        }
        Ok(())
    }

    pub fn at_distance(&self, r: f64) -> f64 {
        (r + 1.0).powf(-self.beta)
    }
}

/// Nonnegative per-mode variances of a circulant-embedded Gaussian field.
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    grid: PeriodicGrid,
    spec: CovarianceSpec,
    values: Vec<f64>,
    mass_before_clamp: f64,
    clamped_fraction: f64,
}

impl SpectralDensity {
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    /// `S(k)`, normalized so that the site variance is `sum_k S(k)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass_before_clamp(&self) -> f64 {
        self.mass_before_clamp
    }

    pub fn clamped_fraction(&self) -> f64 {
        self.clamped_fraction
    }

    /// Covariance between the origin and every site implied by the
    /// clamped density.
    pub fn implied_covariance(&self) -> ScalarField {
        let sp = Spectral::for_grid(&self.grid);
        let mut data: Vec<Complex64> = self
            .values
            .iter()
            .map(|&s| Complex64::new(s, 0.0))
            .collect();
        sp.inverse_in_place(&mut data);
        let n = self.grid.len() as f64;
        ScalarField::from_raw(self.grid, data.into_iter().map(|z| z.re * n).collect())
    }
}

pub fn spectral_density(spec: &CovarianceSpec, grid: &PeriodicGrid) -> Result<SpectralDensity> {
    spec.validate()?;
    let c: Vec<f64> = (0..grid.len())
        .map(|i| spec.at_distance(grid.distance_from_origin(i)))
        .collect();
    let sp = Spectral::for_grid(grid);
    let inv_n = 1.0 / grid.len() as f64;
    let mut values: Vec<f64> = sp
        .forward_real(&c)
        .into_iter()
        .map(|z| z.re * inv_n)
        .collect();
    let mass_before_clamp: f64 = values.iter().sum();
    let mut negative = 0.0;
    let mut positive = 0.0;
    for v in &mut values {
        if *v < 0.0 {
            negative -= *v;
            *v = 0.0;
        } else {
            positive += *v;
        }
    }
    let clamped_fraction = if positive > 0.0 {
        negative / positive
    } else {
        1.0
    };
    if clamped_fraction > CLAMP_BUDGET {
        return Err(Error::ClampBudgetExceeded {
            fraction: clamped_fraction,
            budget: CLAMP_BUDGET,
        });
    }
    Ok(SpectralDensity {
        grid: *grid,
        spec: *spec,
        values,
        mass_before_clamp,
        clamped_fraction,
    })
}

/// Identifies one member of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleSeed {
    pub master_seed: u64,
    pub sample_index: u64,
}

impl SampleSeed {
    pub fn new(master_seed: u64, sample_index: u64) -> Self {
        Self {
            master_seed,
            sample_index,
        }
    }

    /// Independent random stream for this sample; `stream` separates uses.
    pub fn rng(&self, stream: &str) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(b"homoglab/seed/v1");
        h.update(self.master_seed.to_le_bytes());
        h.update(self.sample_index.to_le_bytes());
        h.update(stream.as_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha20Rng::from_seed(key)
    }
}

/// One Gaussian sample with the torus covariance of `density`.
pub fn sample_gaussian(density: &SpectralDensity, seed: SampleSeed) -> ScalarField {
    let grid = density.grid;
    let mut rng = seed.rng("gaussian");
    let mut data: Vec<Complex64> = density
        .values
        .iter()
        .map(|&s| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(z1, z2) * s.sqrt()
        })
        .collect();
    let sp = Spectral::for_grid(&grid);
    sp.inverse_in_place(&mut data);
    let n = grid.len() as f64;
    ScalarField::from_raw(grid, data.into_iter().map(|z| z.re * n).collect())
}
