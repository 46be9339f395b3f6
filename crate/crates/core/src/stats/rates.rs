use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predicted rate functions, selected by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateName {
    /// Flux-average fluctuation growth in `T`.
    MuBeta,
    /// Semigroup decay in `T`.
    EtaBeta,
    /// Inverse squared corrector-gradient fluctuation in `r`.
    PiStar,
    /// Corrector growth in `|x|`.
    XiDbeta,
    /// Fluctuation of the integrated-heat weighted flux in `r`.
    ChiDbeta,
}

impl RateName {
    pub const ALL: [RateName; 5] = [
        RateName::MuBeta,
        RateName::EtaBeta,
        RateName::PiStar,
        RateName::XiDbeta,
        RateName::ChiDbeta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RateName::MuBeta => "mu_beta",
            RateName::EtaBeta => "eta_beta",
            RateName::PiStar => "pi_star",
            RateName::XiDbeta => "xi_dbeta",
            RateName::ChiDbeta => "chi_dbeta",
        }
    }
}

impl fmt::Display for RateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RateName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "rate law",
                name: s.to_string(),
            })
    }
}

/// A rate function with its parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLaw {
    pub name: RateName,
    pub d: usize,
    pub beta: f64,
}

impl RateLaw {
    pub fn new(name: RateName, d: usize, beta: f64) -> Result<Self> {
        let law = Self { name, d, beta };
        // branch check up front so evaluation never fails on the domain
        law.eval(2.0)?;
        Ok(law)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        rate(self.name, self.d, self.beta, x)
    }
}

/// Evaluates a rate function at `x >= 1`.
pub fn rate(name: RateName, d: usize, beta: f64, x: f64) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return Err(Error::param("d", format!("dimension {d} outside 1..=3")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", "beta must be positive"));
    }
    if !(x >= 1.0 && x.is_finite()) {
        return Err(Error::param("argument", format!("{x} is below 1")));
    }
    let df = d as f64;
    let unknown = || Error::UnknownBranch {
        name: name.as_str(),
        d,
        beta,
    };
    let v = match name {
        RateName::MuBeta => {
            if beta < df {
                x.powf((df - beta) / 4.0)
            } else if beta == df {
                x.ln().sqrt()
            } else {
                1.0
            }
        }
        RateName::EtaBeta => {
            if beta < df {
                x.powf(-0.5 - beta / 4.0)
            } else if beta == df {
                x.ln().sqrt() * x.powf(-0.5 - df / 4.0)
            } else {
                x.powf(-0.5 - df / 4.0)
            }
        }
        RateName::PiStar => {
            if beta < df {
                x.powf(beta)
            } else if beta == df {
                x.powf(df) / x.ln()
            } else {
                x.powf(df)
            }
        }
        RateName::XiDbeta => {
            if beta < 2.0 {
                (x + 1.0).powf(1.0 - beta / 2.0)
            } else if beta == 2.0 && d == 2 {
                (x + 2.0).ln()
            } else if (beta == 2.0 && d > 2) || (beta > 2.0 && d == 2) {
                (x + 2.0).ln().sqrt()
            } else if beta > 2.0 && d > 2 {
                1.0
            } else {
                return Err(unknown());
            }
        }
        RateName::ChiDbeta => {
            if beta < 2.0 && d > 2 {
                (x + 1.0).powf(1.0 - beta / 2.0)
            } else if beta <= 2.0 && d == 2 {
                (x + 1.0).powf(1.0 - beta / 2.0) * (x + 2.0).ln()
            } else if (beta == 2.0 && d > 2) || (beta > 2.0 && d == 2) {
                (x + 2.0).ln().sqrt()
            } else if beta > 2.0 && d > 2 {
                1.0
            } else {
                return Err(unknown());
            }
        }
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_points() {
        assert_eq!(rate(RateName::MuBeta, 2, 1.0, 16.0).unwrap(), 2.0);
        assert_eq!(rate(RateName::EtaBeta, 2, 3.0, 16.0).unwrap(), 0.0625);
        assert_eq!(rate(RateName::PiStar, 2, 4.0, 4.0).unwrap(), 16.0);
        assert_eq!(rate(RateName::XiDbeta, 2, 1.0, 3.0).unwrap(), 2.0);
        assert_eq!(rate(RateName::ChiDbeta, 3, 3.0, 7.0).unwrap(), 1.0);
    }

    #[test]
    fn one_dimensional_gaps() {
        assert!(matches!(
            rate(RateName::ChiDbeta, 1, 1.0, 4.0),
            Err(Error::UnknownBranch { .. })
        ));
        assert!(matches!(
            rate(RateName::XiDbeta, 1, 3.0, 4.0),
            Err(Error::UnknownBranch { .. })
        ));
        assert!(rate(RateName::XiDbeta, 1, 1.0, 4.0).is_ok());
        assert!(RateLaw::new(RateName::ChiDbeta, 1, 3.0).is_err());
    }

    #[test]
    fn names_round_trip() {
        for r in RateName::ALL {
            assert_eq!(r.as_str().parse::<RateName>().unwrap(), r);
        }
        assert!("nu".parse::<RateName>().is_err());
    }

    #[test]
    fn domain() {
        assert!(rate(RateName::MuBeta, 2, 1.0, 0.5).is_err());
        assert!(rate(RateName::MuBeta, 2, 0.0, 2.0).is_err());
        assert!(rate(RateName::MuBeta, 4, 1.0, 2.0).is_err());
    }
}
