//! Richardson extrapolation of massive correctors along a dyadic ladder of
//! masses, and the effective coefficients built from the extrapolants.

use serde::{Deserialize, Serialize};

use crate::corrector::{
    solve_massive_corrector, CorrectorSolution, HomogenizedEstimate, Provenance, SolverConfig,
};
use crate::error::{Error, Result};
use crate::gaussian_field::{CoefficientField, SampleSeed};
use crate::lattice::{gradient, ScalarField, VectorField};

/// Massive correctors at `T_0 2^k`, `k = 0..=K`, and their extrapolants.
#[derive(Debug, Clone)]
pub struct ExtrapolationLadder {
    pub base_t: f64,
    pub direction: usize,
    pub levels: Vec<CorrectorSolution>,
    /// `extrapolants[n - 1][k]` is the order-`n` extrapolant at `T_0 2^k`.
    extrapolants: Vec<Vec<ScalarField>>,
}

impl ExtrapolationLadder {
    pub fn orders(&self) -> usize {
        self.extrapolants.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.mass_time).collect()
    }

    /// Order-`n` extrapolant at `T`, if `T` is on the ladder and deep enough.
    pub fn extrapolant(&self, n: usize, t: f64) -> Option<&ScalarField> {
        let k = self.level_index(t)?;
        self.extrapolants.get(n.checked_sub(1)?)?.get(k)
    }

    fn level_index(&self, t: f64) -> Option<usize> {
        self.levels
            .iter()
            .position(|l| (l.mass_time - t).abs() <= 1e-12 * t)
    }
}

/// `phi^{n+1}_T = (2^n phi^n_{2T} - phi^n_T) / (2^n - 1)` applied to a
/// sequence indexed by dyadic level.
pub fn richardson_step<T: Clone>(
    order: usize,
    seq: &[T],
    combine: impl Fn(&T, f64, &T, f64) -> T,
) -> Vec<T> {
    let p = 2f64.powi(order as i32);
    seq.windows(2)
        .map(|w| combine(&w[1], p / (p - 1.0), &w[0], -1.0 / (p - 1.0)))
        .collect()
}

fn combine_fields(a: &ScalarField, ca: f64, b: &ScalarField, cb: f64) -> ScalarField {
    a.zip_map(b, |x, y| ca * x + cb * y)
}

pub fn build_ladder(
    a: &CoefficientField,
    direction: usize,
    base_t: f64,
    depth: usize,
    orders: usize,
    cfg: &SolverConfig,
) -> Result<ExtrapolationLadder> {
    if orders == 0 || orders > depth + 1 {
        return Err(Error::param(
            "orders",
            format!("need 1 <= N <= K + 1 = {}", depth + 1),
        ));
    }
    if !(base_t > 0.0 && base_t.is_finite()) {
        return Err(Error::param("T0", "must be positive"));
    }
    let levels = (0..=depth)
        .map(|k| solve_massive_corrector(a, direction, base_t * 2f64.powi(k as i32), cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut extrapolants = vec![levels.iter().map(|l| l.phi.clone()).collect::<Vec<_>>()];
    for n in 1..orders {
        let next = richardson_step(n, extrapolants.last().unwrap(), combine_fields);
        extrapolants.push(next);
    }
    Ok(ExtrapolationLadder {
        base_t,
        direction,
        levels,
        extrapolants,
    })
}

fn shifted_gradient(phi: &ScalarField, direction: usize) -> VectorField {
    let mut g = gradient(phi);
    for v in g.component_mut(direction) {
        *v += 1.0;
    }
    g
}

/// `e_j . A e_i = mean((grad phi_j + e_j) . a_edge (grad phi_i + e_i))`.
pub fn bilinear_matrix(a: &CoefficientField, phis: &[&ScalarField]) -> Result<Vec<Vec<f64>>> {
    let d = a.grid().dim();
    if phis.len() != d {
        return Err(Error::param(
            "phis",
            format!("expected {d} directions, got {}", phis.len()),
        ));
    }
    let edges = a.edge_coefficients();
    let shifted: Vec<VectorField> = phis
        .iter()
        .enumerate()
        .map(|(i, p)| shifted_gradient(p, i))
        .collect();
    let n = a.grid().len() as f64;
    let mut m = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for (axis, e) in edges.iter().enumerate() {
                let (x, y) = (shifted[j].component(axis), shifted[i].component(axis));
                s += x
                    .iter()
                    .zip(y)
                    .zip(e)
                    .map(|((p, q), w)| p * w * q)
                    .sum::<f64>();
            }
            m[j][i] = s / n;
        }
    }
    Ok(m)
}

/// Massive-corrector estimate of the effective coefficient at one `T`.
pub fn massive_homogenized_matrix(
    a: &CoefficientField,
    solutions: &[CorrectorSolution],
    seeds: Vec<SampleSeed>,
) -> Result<HomogenizedEstimate> {
    let t = solutions.first().map(|s| s.mass_time).unwrap_or(f64::NAN);
    let phis: Vec<&ScalarField> = solutions.iter().map(|s| &s.phi).collect();
    Ok(HomogenizedEstimate {
        matrix: bilinear_matrix(a, &phis)?,
        provenance: Provenance::MassiveT { t },
        side: a.grid().side(),
        seeds,
    })
}

/// Effective coefficient built from the order-`n` extrapolants at `T`.
pub fn a_hom_extrapolated(
    a: &CoefficientField,
    ladders: &[ExtrapolationLadder],
    n: usize,
    t: f64,
    seeds: Vec<SampleSeed>,
) -> Result<HomogenizedEstimate> {
    let phis = ladders
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if l.direction != i {
                return Err(Error::param(
                    "ladders",
                    "expected one ladder per direction, in order",
                ));
            }
            l.extrapolant(n, t)
                .ok_or_else(|| Error::param("n", format!("no order-{n} extrapolant at T = {t}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HomogenizedEstimate {
        matrix: bilinear_matrix(a, &phis)?,
        provenance: Provenance::ExtrapolatedNT { level: n, t },
        side: a.grid().side(),
        seeds,
    })
}

/// Richardson ladder of the scalar resolvent `g_1(zeta, T) = 1/(zeta + 1/T)`.
pub fn scalar_resolvent_model(n: usize, t: f64, zeta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "order starts at 1"));
    }
    if !(zeta > 0.0) || !(t > 0.0) {
        return Err(Error::param("zeta", "zeta and T must be positive"));
    }
    let base: Vec<f64> = (0..n)
        .map(|k| 1.0 / (zeta + 1.0 / (t * 2f64.powi(k as i32))))
        .collect();
    let mut seq = base;
    for order in 1..n {
        seq = richardson_step(order, &seq, |x, cx, y, cy| cx * x + cy * y);
    }
    Ok(seq[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystematicRow {
    pub n: usize,
    pub t: f64,
    /// Root mean square over the cell of `|grad phi^n_T - grad phi_ref|`,
    /// summed over directions.
    pub grad_error: f64,
    /// Frobenius norm of `A^n_T - A_ref`.
    pub ahom_error: f64,
    pub matrix: Vec<Vec<f64>>,
}

/// Errors of every extrapolant against the steady corrector on the same
/// sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystematicReport {
    pub reference: String,
    pub reference_matrix: Vec<Vec<f64>>,
    pub rows: Vec<SubsystematicRow>,
}

pub fn subsystematic_report(
    a: &CoefficientField,
    ladders: &[ExtrapolationLadder],
    reference: &[CorrectorSolution],
    seeds: Vec<SampleSeed>,
) -> Result<SubsystematicReport> {
    let ref_est = crate::corrector::rve_homogenized_matrix(reference, seeds.clone())?;
    let ref_grads: Vec<VectorField> = reference.iter().map(|s| s.grad_phi()).collect();
    let first = ladders
        .first()
        .ok_or_else(|| Error::param("ladders", "empty"))?;
    let mut rows = Vec::new();
    for n in 1..=first.orders() {
        for t in first.times() {
            if first.extrapolant(n, t).is_none() {
                continue;
            }
            let est = a_hom_extrapolated(a, ladders, n, t, seeds.clone())?;
            let mut sq = 0.0;
            for (l, g_ref) in ladders.iter().zip(&ref_grads) {
                let diff = gradient(l.extrapolant(n, t).unwrap()).sub(g_ref);
                sq += diff.rms().powi(2);
            }
            rows.push(SubsystematicRow {
                n,
                t,
                grad_error: sq.sqrt(),
                ahom_error: est.frobenius_distance(&ref_est),
                matrix: est.matrix,
            });
        }
    }
    Ok(SubsystematicReport {
        reference: "steady periodic corrector on the same sample".into(),
        reference_matrix: ref_est.matrix,
        rows,
    })
}
