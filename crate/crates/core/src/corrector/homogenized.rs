use serde::{Deserialize, Serialize};

use super::solve::CorrectorSolution;
use crate::error::{Error, Result};
use crate::gaussian_field::SampleSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    RveSteady,
    MassiveT { t: f64 },
    ExtrapolatedNT { level: usize, t: f64 },
}

/// Effective coefficient matrix estimated on one periodic cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedEstimate {
    /// Row-major `d x d`; column `i` is the response to direction `e_i`.
    pub matrix: Vec<Vec<f64>>,
    pub provenance: Provenance,
    pub side: usize,
    pub seeds: Vec<SampleSeed>,
}

impl HomogenizedEstimate {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                m = m.max((self.matrix[i][j] - self.matrix[j][i]).abs());
            }
        }
        m
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        let sym: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| 0.5 * (self.matrix[i][j] + self.matrix[j][i]))
                    .collect()
            })
            .collect();
        symmetric_eigenvalues(sym)
    }

    /// Largest entrywise difference.
    pub fn distance(&self, other: &HomogenizedEstimate) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .zip(other.matrix.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm of the difference.
    pub fn frobenius_distance(&self, other: &HomogenizedEstimate) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .zip(other.matrix.iter().flatten())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Cyclic Jacobi rotations; adequate for `d <= 3`.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let d = a.len();
    for _ in 0..64 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Column `i` is the cell average of the flux for direction `e_i`.
pub fn rve_homogenized_matrix(
    solutions: &[CorrectorSolution],
    seeds: Vec<SampleSeed>,
) -> Result<HomogenizedEstimate> {
    let first = solutions
        .first()
        .ok_or_else(|| Error::param("solutions", "need one corrector per direction"))?;
    let grid = *first.phi.grid();
    let d = grid.dim();
    if solutions.len() != d {
        return Err(Error::param(
            "solutions",
            format!("expected {d} directions, got {}", solutions.len()),
        ));
    }
    let mut matrix = vec![vec![0.0; d]; d];
    for (i, sol) in solutions.iter().enumerate() {
        if sol.direction != i || !sol.is_steady() || *sol.phi.grid() != grid {
            return Err(Error::param(
                "solutions",
                "expected steady correctors ordered by direction",
            ));
        }
        for (j, m) in sol.flux.mean().into_iter().enumerate() {
            matrix[j][i] = m;
        }
    }
    let est = HomogenizedEstimate {
        matrix,
        provenance: Provenance::RveSteady,
        side: grid.side(),
        seeds,
    };
    let scale = est
        .matrix
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if est.asymmetry() > 1e-8 * scale.max(1.0) {
        return Err(Error::param(
            "matrix",
            format!("homogenized matrix asymmetric by {:.3e}", est.asymmetry()),
        ));
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_eigenvalues() {
        let ev = symmetric_eigenvalues(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let ev = symmetric_eigenvalues(vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ]);
        let tr: f64 = ev.iter().sum();
        assert!((tr - 9.0).abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
    }
}
