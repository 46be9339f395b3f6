use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::moments::bootstrap_rng;
use crate::error::{Error, Result};

const FIT_RESAMPLES: usize = 2000;

/// Logarithmic factor divided out of the values before fitting:
/// `y / log(x + shift)^power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogCorrection {
    None,
    Log { shift: f64 },
    SqrtLog { shift: f64 },
}

impl LogCorrection {
    pub fn divisor(&self, x: f64) -> f64 {
        match *self {
            LogCorrection::None => 1.0,
            LogCorrection::Log { shift } => (x + shift).ln(),
            LogCorrection::SqrtLog { shift } => (x + shift).ln().sqrt(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            LogCorrection::None => "none".into(),
            LogCorrection::Log { shift } => format!("log(x+{shift})"),
            LogCorrection::SqrtLog { shift } => format!("log^1/2(x+{shift})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    /// Standard error of `y`; zero for exact values.
    pub stderr: f64,
}

impl FitPoint {
    pub fn new(x: f64, y: f64, stderr: f64) -> Self {
        Self { x, y, stderr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Bootstrap 95% interval for the slope.
    pub ci: (f64, f64),
    pub abscissae: Vec<f64>,
    pub correction: LogCorrection,
}

impl ScalingFit {
    pub fn contains(&self, target: f64) -> bool {
        self.ci.0 <= target && target <= self.ci.1
    }
}

/// Weighted least squares of `ln y` against `ln x`; returns
/// `(slope, intercept)`.
fn weighted_line(lx: &[f64], ly: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = lx.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ly.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxy: f64 = lx
        .iter()
        .zip(ly)
        .zip(w)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    let sxx: f64 = lx.iter().zip(w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits `y ~ C x^slope` after dividing out `correction`. Points are
/// weighted by the inverse variance of `ln y`; the interval comes from
/// resampling every value log-normally with its own standard error.
pub fn loglog_fit(points: &[FitPoint], correction: LogCorrection) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::param(
            "points",
            format!("need at least 3 abscissae, got {}", points.len()),
        ));
    }
    let mut lx = Vec::with_capacity(points.len());
    let mut ly = Vec::with_capacity(points.len());
    let mut sig = Vec::with_capacity(points.len());
    for p in points {
        if !(p.x > 0.0) {
            return Err(Error::param("abscissa", format!("{} is not positive", p.x)));
        }
        let div = correction.divisor(p.x);
        let y = p.y / div;
        if !(y > 0.0 && y.is_finite()) || !(div > 0.0) {
            return Err(Error::NonPositiveValue {
                abscissa: p.x,
                value: y,
            });
        }
        lx.push(p.x.ln());
        ly.push(y.ln());
        sig.push((p.stderr / p.y).max(0.0));
    }
    let weighted = sig.iter().all(|&s| s > 0.0);
    let w: Vec<f64> = if weighted {
        sig.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; points.len()]
    };
    let (slope, intercept) = weighted_line(&lx, &ly, &w);
    let my = ly.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / w.iter().sum::<f64>();
    let ss_tot: f64 = ly.iter().zip(&w).map(|(y, w)| w * (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .zip(&w)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };

    let ci = if sig.iter().any(|&s| s > 0.0) {
        let mut rng = bootstrap_rng(0, "loglog_fit");
        let mut slopes: Vec<f64> = (0..FIT_RESAMPLES)
            .map(|_| {
                let ys: Vec<f64> = ly
                    .iter()
                    .zip(&sig)
                    .map(|(y, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        y + s * z
                    })
                    .collect();
                weighted_line(&lx, &ys, &w).0
            })
            .collect();
        slopes.sort_by(f64::total_cmp);
        let lo = slopes[(0.025 * FIT_RESAMPLES as f64) as usize];
        let hi = slopes[(0.975 * FIT_RESAMPLES as f64) as usize - 1];
        (lo.min(slope), hi.max(slope))
    } else {
        (slope, slope)
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        ci,
        abscissae: points.iter().map(|p| p.x).collect(),
        correction,
    })
}

/// What a fitted slope is asserted against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeCriterion {
    /// `|slope - target| <= tolerance`.
    Within { target: f64, tolerance: f64 },
    /// `slope <= bound` (growth envelope).
    AtMost { bound: f64 },
}

impl SlopeCriterion {
    pub fn target(&self) -> f64 {
        match *self {
            SlopeCriterion::Within { target, .. } => target,
            SlopeCriterion::AtMost { bound } => bound,
        }
    }

    pub fn accepts(&self, slope: f64) -> bool {
        match *self {
            SlopeCriterion::Within { target, tolerance } => (slope - target).abs() <= tolerance,
            SlopeCriterion::AtMost { bound } => slope <= bound,
        }
    }
}

/// A fit together with its acceptance verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    pub label: String,
    pub fit: ScalingFit,
    pub criterion: SlopeCriterion,
    pub pass: bool,
    /// Whether the bootstrap interval covers the target; reported only.
    pub target_in_ci: bool,
}

impl SlopeCheck {
    pub fn new(label: impl Into<String>, fit: ScalingFit, criterion: SlopeCriterion) -> Self {
        let pass = criterion.accepts(fit.slope);
        let target_in_ci = match criterion {
            SlopeCriterion::Within { target, .. } => fit.contains(target),
            SlopeCriterion::AtMost { bound } => fit.ci.0 <= bound,
        };
        Self {
            label: label.into(),
            fit,
            criterion,
            pass,
            target_in_ci,
        }
    }
}
