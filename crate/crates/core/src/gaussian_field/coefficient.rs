use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lattice::{PeriodicGrid, ScalarField};

/// Pointwise map from the Gaussian field to the coefficient, `a = A(g)`.
pub trait CoefficientMap: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;
    /// Ellipticity constant: every output lies in `[lambda, 1]`.
    fn lambda(&self) -> f64;
    fn apply(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic {
    pub lambda: f64,
    pub kappa: f64,
}

impl CoefficientMap for Logistic {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn apply(&self, t: f64) -> f64 {
        self.lambda + (1.0 - self.lambda) / (1.0 + (-self.kappa * t).exp())
    }
}

/// `(b + exp(-kappa_tilde (t - m))) / (c + exp(-kappa (t - m)))`, clamped
/// to `[lambda, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalClamped {
    pub lambda: f64,
    pub b: f64,
    pub c: f64,
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub m: f64,
}

impl CoefficientMap for LognormalClamped {
    fn name(&self) -> &'static str {
        "lognormal-clamped"
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn apply(&self, t: f64) -> f64 {
        let s = t - self.m;
        let num = self.b + (-self.kappa_tilde * s).exp();
        let den = self.c + (-self.kappa * s).exp();
        let v = num / den;
        if v.is_nan() {
            // both exponentials overflowed; the ratio tends to the dominant rate
            return if self.kappa_tilde > self.kappa {
                1.0
            } else {
                self.lambda
            };
        }
        v.clamp(self.lambda, 1.0)
    }
}

type MapFactory = fn(f64, &Value) -> Result<Box<dyn CoefficientMap>>;

const REGISTRY: &[(&str, MapFactory)] = &[
    ("logistic", |lambda, p| {
        Ok(Box::new(Logistic {
            lambda,
            kappa: positive(p, "kappa", 1.0)?,
        }))
    }),
    ("lognormal-clamped", |lambda, p| {
        let b = number(p, "b", 1.0)?;
        let c = number(p, "c", 1.0)?;
        if b < 0.0 || c <= 0.0 {
            return Err(Error::param(
                "params",
                "lognormal-clamped needs b >= 0 and c > 0",
            ));
        }
        Ok(Box::new(LognormalClamped {
            lambda,
            b,
            c,
            kappa: positive(p, "kappa", 1.0)?,
            kappa_tilde: number(p, "kappa_tilde", 0.0)?,
            m: number(p, "m", 0.0)?,
        }))
    }),
];

fn number(p: &Value, key: &'static str, default: f64) -> Result<f64> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::param(key, format!("expected a finite number, got {v}"))),
    }
}

fn positive(p: &Value, key: &'static str, default: f64) -> Result<f64> {
    let v = number(p, key, default)?;
    if v <= 0.0 {
        return Err(Error::param(key, "must be positive"));
    }
    Ok(v)
}

pub fn coefficient_map_names() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|(n, _)| *n)
}

/// Serializable description of a coefficient map, resolved by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientMapSpec {
    pub kind: String,
    pub lambda: f64,
    #[serde(default = "empty_object", skip_serializing_if = "is_empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn is_empty_object(v: &Value) -> bool {
    v.as_object().is_some_and(|m| m.is_empty())
}

impl CoefficientMapSpec {
    pub fn logistic(lambda: f64, kappa: f64) -> Self {
        Self {
            kind: "logistic".into(),
            lambda,
            params: serde_json::json!({ "kappa": kappa }),
        }
    }

    pub fn build(&self) -> Result<Box<dyn CoefficientMap>> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::param("lambda", "lambda must lie in (0, 1]"));
        }
        if !(self.params.is_object() || self.params.is_null()) {
            return Err(Error::param("params", "expected an object"));
        }
        let factory = REGISTRY
            .iter()
            .find(|(n, _)| *n == self.kind)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "coefficient map",
                name: self.kind.clone(),
            })?;
        factory(self.lambda, &self.params)
    }
}

/// Isotropic scalar coefficient field with certified bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    values: ScalarField,
    lower: f64,
    upper: f64,
    perturbation: Option<(f64, ScalarField)>,
}

impl CoefficientField {
    /// Wraps arbitrary positive values; the bounds are their min and max.
    pub fn from_field(values: ScalarField) -> Result<Self> {
        let (lower, upper) = min_max(values.values());
        if lower <= 0.0 {
            return Err(Error::param(
                "coefficient",
                format!("minimum {lower} is not positive"),
            ));
        }
        Ok(Self {
            values,
            lower,
            upper,
            perturbation: None,
        })
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Result<Self> {
        Self::from_field(ScalarField::constant(grid, c))
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.values.grid()
    }

    pub fn field(&self) -> &ScalarField {
        &self.values
    }

    pub fn values(&self) -> &[f64] {
        self.values.values()
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// `(delta, a_tilde)` when built by [`small_contrast_field`].
    pub fn perturbation(&self) -> Option<(f64, &ScalarField)> {
        self.perturbation.as_ref().map(|(d, f)| (*d, f))
    }

    /// Harmonic mean of the two site values on every edge, per axis.
    pub fn edge_coefficients(&self) -> Vec<Vec<f64>> {
        let grid = *self.grid();
        let a = self.values();
        let mut shifted = vec![0.0; grid.len()];
        (0..grid.dim())
            .map(|axis| {
                crate::lattice::shift_into(&grid, a, &mut shifted, axis, 1);
                a.iter()
                    .zip(&shifted)
                    .map(|(x, y)| 2.0 * x * y / (x + y))
                    .collect()
            })
            .collect()
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

pub fn apply_coefficient_map(
    g: &ScalarField,
    map: &dyn CoefficientMap,
) -> Result<CoefficientField> {
    let lambda = map.lambda();
    let values = g.map(|t| map.apply(t));
    let (lo, hi) = min_max(values.values());
    if !(lo >= lambda && hi <= 1.0) {
        return Err(Error::param(
            "coefficient map",
            format!(
                "{} produced values in [{lo}, {hi}] outside [{lambda}, 1]",
                map.name()
            ),
        ));
    }
    Ok(CoefficientField {
        values,
        lower: lambda,
        upper: 1.0,
        perturbation: None,
    })
}

/// Centred bounded perturbation `tanh(g / 2) = 2 / (1 + e^-g) - 1`.
pub fn centred_perturbation(g: &ScalarField) -> ScalarField {
    g.map(|t| (0.5 * t).tanh())
}

/// `a = 1 + delta * a_tilde` with `a_tilde = tanh(g / 2)` in `[-1, 1]`.
pub fn small_contrast_field(g: &ScalarField, delta: f64) -> Result<CoefficientField> {
    small_contrast_from_perturbation(centred_perturbation(g), delta)
}

/// `a = 1 + delta * a_tilde` for a given perturbation with `|a_tilde| <= 1`.
pub fn small_contrast_from_perturbation(
    atilde: ScalarField,
    delta: f64,
) -> Result<CoefficientField> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    if atilde.max_abs() > 1.0 {
        return Err(Error::param("a_tilde", "perturbation must lie in [-1, 1]"));
    }
    let values = atilde.map(|t| 1.0 + delta * t);
    Ok(CoefficientField {
        values,
        lower: 1.0 - delta,
        upper: 1.0 + delta,
        perturbation: Some((delta, atilde)),
    })
}
