//! Ensemble orchestration, moment estimates, log-log fits and the table of
//! predicted rates.

pub mod convergence;
mod ensemble;
pub mod experiments;
mod fit;
mod moments;
mod rates;

pub use ensemble::{run_ensemble, EnsembleSpec};
pub use fit::{loglog_fit, FitPoint, LogCorrection, ScalingFit, SlopeCheck, SlopeCriterion};
pub use moments::{
    bootstrap_rng, fluctuation_moment, mean_with_stderr, std_dev, MomentEstimate,
    BOOTSTRAP_RESAMPLES,
};
pub use rates::{rate, RateLaw, RateName};
