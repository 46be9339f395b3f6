use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometric time stepping: `dt_k = max(dt_min, theta * t_k)`, with steps
/// shortened so that every probe time and the final time are hit exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_final: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
}

fn default_theta() -> f64 {
    0.1
}

fn default_dt_min() -> f64 {
    0.01
}

impl TimeGrid {
    pub fn new(t_final: f64) -> Result<Self> {
        Self::with_steps(t_final, default_theta(), default_dt_min())
    }

    pub fn with_steps(t_final: f64, theta: f64, dt_min: f64) -> Result<Self> {
        let g = Self {
            t_final,
            theta,
            dt_min,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::param("t_final", "must be positive"));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::param("theta", "must lie in (0, 1]"));
        }
        if !(self.dt_min > 0.0 && self.dt_min.is_finite()) {
            return Err(Error::param("dt_min", "must be positive"));
        }
        Ok(())
    }

    /// Halves both step parameters.
    pub fn refined(&self) -> Self {
        Self {
            theta: 0.5 * self.theta,
            dt_min: 0.5 * self.dt_min,
            ..*self
        }
    }

    /// Strictly increasing nodes `t_1 < ... < t_K = t_final` (the initial
    /// time 0 is implicit).
    pub fn nodes(&self, probes: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        let mut stops: Vec<f64> = probes.to_vec();
        for &p in &stops {
            if !(p > 0.0 && p <= self.t_final) {
                return Err(Error::param(
                    "probes",
                    format!("probe time {p} outside (0, {}]", self.t_final),
                ));
            }
        }
        stops.push(self.t_final);
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        let mut nodes = Vec::new();
        let mut t = 0.0;
        for stop in stops {
            while t < stop {
                let dt = self.dt_min.max(self.theta * t);
                // avoid a sliver step just before a stop
                t = if t + 1.0001 * dt >= stop {
                    stop
                } else {
                    t + dt
                };
                nodes.push(t);
            }
        }
        Ok(nodes)
    }
}
