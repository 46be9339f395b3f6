use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::SampleSeed;

pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: f64,
    /// `mean(|X - mean X|^p)^(1/p)`.
    pub value: f64,
    /// Bootstrap standard error.
    pub stderr: f64,
    pub samples: usize,
}

fn centred_moment(xs: &[f64], p: f64) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m = xs.iter().map(|x| (x - mean).abs().powf(p)).sum::<f64>() / n;
    m.powf(1.0 / p)
}

/// Deterministic random stream for resampling, separate from the field
/// streams of every sample.
pub fn bootstrap_rng(master_seed: u64, label: &str) -> rand_chacha::ChaCha20Rng {
    SampleSeed::new(master_seed, u64::MAX).rng(&format!("bootstrap/{label}"))
}

/// Centred `p`-th moment of a column with a bootstrap standard error.
pub fn fluctuation_moment(column: &[f64], p: f64, master_seed: u64) -> Result<MomentEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", "moment order must be at least 1"));
    }
    if column.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: column.len(),
            need: MIN_SAMPLES,
        });
    }
    let value = centred_moment(column, p);
    let mut rng = bootstrap_rng(master_seed, "moment");
    let mut buf = vec![0.0; column.len()];
    let reps: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = column[rng.random_range(0..column.len())];
            }
            centred_moment(&buf, p)
        })
        .collect();
    Ok(MomentEstimate {
        p,
        value,
        stderr: std_dev(&reps),
        samples: column.len(),
    })
}

/// Sample standard deviation with the `n - 1` normalization.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Mean and its standard error.
pub fn mean_with_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, std_dev(xs) / n.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_column(n: usize) -> Vec<f64> {
        let mut rng = SampleSeed::new(11, 0).rng("test");
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn constant_column_has_no_fluctuation() {
        let m = fluctuation_moment(&[3.25; 16], 2.0, 1).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.stderr, 0.0);
    }

    #[test]
    fn gaussian_moments() {
        let xs = normal_column(4000);
        let m2 = fluctuation_moment(&xs, 2.0, 5).unwrap();
        assert!((m2.value - 1.0).abs() <= 3.0 * m2.stderr, "{m2:?}");
        let m4 = fluctuation_moment(&xs, 4.0, 5).unwrap();
        assert!(
            (m4.value - 3f64.powf(0.25)).abs() <= 3.0 * m4.stderr,
            "{m4:?}"
        );
    }

    #[test]
    fn reproducible_and_guarded() {
        let xs = normal_column(50);
        assert_eq!(
            fluctuation_moment(&xs, 2.0, 9).unwrap(),
            fluctuation_moment(&xs, 2.0, 9).unwrap()
        );
        assert!(matches!(
            fluctuation_moment(&xs[..7], 2.0, 9),
            Err(Error::TooFewSamples { got: 7, need: 8 })
        ));
    }
}
