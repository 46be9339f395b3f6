use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-spacing periodic lattice `(Z / nZ)^d`.
///
/// Sites are stored row-major: the last axis is contiguous, so axis `i`
/// has stride `n^(d-1-i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct PeriodicGrid {
    dim: usize,
    side: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    d: usize,
    n: usize,
}

impl TryFrom<GridRepr> for PeriodicGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        PeriodicGrid::new(r.d, r.n)
    }
}

impl From<PeriodicGrid> for GridRepr {
    fn from(g: PeriodicGrid) -> Self {
        GridRepr {
            d: g.dim,
            n: g.side,
        }
    }
}

impl PeriodicGrid {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if side < 4 || !side.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "side {side} must be a power of two >= 4"
            )));
        }
        side.checked_pow(dim as u32)
            .filter(|&len| len <= 1 << 30)
            .ok_or_else(|| Error::InvalidGrid(format!("{side}^{dim} sites is too large")))?;
        Ok(Self { dim, side })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    /// Largest admissible probe scale (kernel width, sqrt(T), offset).
    pub fn probe_limit(&self) -> f64 {
        self.side as f64 / 8.0
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        coords
            .iter()
            .fold(0, |acc, &c| acc * self.side + c % self.side)
    }

    /// Index of a site given signed coordinates, wrapped periodically.
    pub fn index_wrapped(&self, coords: &[i64]) -> usize {
        let n = self.side as i64;
        coords
            .iter()
            .fold(0, |acc, &c| acc * self.side + c.rem_euclid(n) as usize)
    }

    pub fn coords(&self, mut index: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = index % self.side;
            index /= self.side;
        }
        out
    }

    /// Minimal-image signed displacement of coordinate `c` from the origin.
    #[inline]
    pub fn min_image(&self, c: usize) -> i64 {
        let n = self.side as i64;
        let c = c as i64;
        if c > n / 2 {
            c - n
        } else {
            c
        }
    }

    /// Euclidean minimal-image distance of a site from the origin.
    pub fn distance_from_origin(&self, index: usize) -> f64 {
        let c = self.coords(index);
        c[..self.dim]
            .iter()
            .map(|&x| {
                let m = self.min_image(x) as f64;
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Squared minimal-image distance of every site from `center`.
    pub fn squared_distances_from(&self, center: usize) -> Vec<f64> {
        let cc = self.coords(center);
        (0..self.len())
            .map(|i| {
                let c = self.coords(i);
                (0..self.dim)
                    .map(|a| {
                        let rel = (c[a] + self.side - cc[a]) % self.side;
                        let m = self.min_image(rel) as f64;
                        m * m
                    })
                    .sum()
            })
            .collect()
    }
}

/// Writes `dst[x] = src[x + dir * e_axis]` with periodic wrap, `dir = ±1`.
pub(crate) fn shift_into(grid: &PeriodicGrid, src: &[f64], dst: &mut [f64], axis: usize, dir: i32) {
    let n = grid.side();
    let s = grid.stride(axis);
    let block = n * s;
    for (sb, db) in src.chunks_exact(block).zip(dst.chunks_exact_mut(block)) {
        if dir > 0 {
            db[..block - s].copy_from_slice(&sb[s..]);
            db[block - s..].copy_from_slice(&sb[..s]);
        } else {
            db[s..].copy_from_slice(&sb[..block - s]);
            db[..s].copy_from_slice(&sb[block - s..]);
        }
    }
}
