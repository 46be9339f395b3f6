use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_field::SampleSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_samples: usize,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn new(n_samples: usize, master_seed: u64) -> Result<Self> {
        let s = Self {
            n_samples,
            master_seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::param("n_samples", "need at least 2 samples"));
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = SampleSeed> + '_ {
        (0..self.n_samples as u64).map(|i| SampleSeed::new(self.master_seed, i))
    }
}

/// Runs `task` once per sample index and returns the results in index
/// order. Work is spread over `threads` workers (the global pool when
/// `None`); the output does not depend on the worker count. The first
/// failing index aborts the run.
pub fn run_ensemble<T, F>(spec: &EnsembleSpec, threads: Option<usize>, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SampleSeed) -> Result<T> + Sync,
{
    spec.validate()?;
    let work = || -> Vec<Result<T>> {
        (0..spec.n_samples as u64)
            .into_par_iter()
            .map(|i| task(SampleSeed::new(spec.master_seed, i)))
            .collect()
    };
    let results = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?
            .install(work),
        None => work(),
    };
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Sample {
                index: i as u64,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn order_and_worker_count_do_not_matter() {
        let spec = EnsembleSpec::new(23, 17).unwrap();
        let f = |s: SampleSeed| -> Result<f64> {
            Ok(s.rng("x").random::<f64>() + s.sample_index as f64)
        };
        let one = run_ensemble(&spec, Some(1), f).unwrap();
        let four = run_ensemble(&spec, Some(4), f).unwrap();
        assert_eq!(one, four);
        assert!(one.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn failures_name_the_sample() {
        let spec = EnsembleSpec::new(6, 0).unwrap();
        let err = run_ensemble(&spec, Some(2), |s| {
            if s.sample_index >= 3 {
                Err(Error::GridMismatch)
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Sample { index: 3, .. }));
        assert!(EnsembleSpec::new(1, 0).is_err());
    }
}
