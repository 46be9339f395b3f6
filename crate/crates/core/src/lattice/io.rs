//! Flat binary and CSV persistence for lattice fields.
//!
//! Binary layout (little endian): magic `HGLF`, `u32` version, `u32` d,
//! `u64` n, `u32` component count, `u8` seed flag, optionally two `u64`
//! (master seed, sample index), then each component as `n^d` row-major `f64`.

use std::io::{Read, Write};

use super::field::{ScalarField, VectorField};
use super::grid::PeriodicGrid;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HGLF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub grid: PeriodicGrid,
    pub components: Vec<Vec<f64>>,
    /// `(master_seed, sample_index)` of the sample the field came from.
    pub seed: Option<(u64, u64)>,
}

impl FieldFile {
    pub fn from_scalar(f: &ScalarField, seed: Option<(u64, u64)>) -> Self {
        Self {
            grid: *f.grid(),
            components: vec![f.values().to_vec()],
            seed,
        }
    }

    pub fn from_vector(v: &VectorField, seed: Option<(u64, u64)>) -> Self {
        Self {
            grid: *v.grid(),
            components: v.components().to_vec(),
            seed,
        }
    }

    pub fn into_scalar(mut self) -> Result<ScalarField> {
        if self.components.len() != 1 {
            return Err(Error::Format(format!(
                "expected 1 component, found {}",
                self.components.len()
            )));
        }
        ScalarField::from_values(self.grid, self.components.pop().unwrap())
    }

    pub fn into_vector(self) -> Result<VectorField> {
        VectorField::from_components(self.grid, self.components)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.side() as u64).to_le_bytes())?;
        w.write_all(&(self.components.len() as u32).to_le_bytes())?;
        match self.seed {
            Some((m, s)) => {
                w.write_all(&[1])?;
                w.write_all(&m.to_le_bytes())?;
                w.write_all(&s.to_le_bytes())?;
            }
            None => w.write_all(&[0])?,
        }
        let mut buf = Vec::with_capacity(8 * self.grid.len());
        for c in &self.components {
            buf.clear();
            for v in c {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let d = read_u32(&mut r)? as usize;
        let n = read_u64(&mut r)? as usize;
        let grid = PeriodicGrid::new(d, n).map_err(|e| Error::Format(e.to_string()))?;
        let count = read_u32(&mut r)? as usize;
        if count == 0 || count > 3 {
            return Err(Error::Format(format!("component count {count}")));
        }
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let seed = match flag[0] {
            0 => None,
            1 => Some((read_u64(&mut r)?, read_u64(&mut r)?)),
            f => return Err(Error::Format(format!("bad seed flag {f}"))),
        };
        let mut buf = vec![0u8; 8 * grid.len()];
        let mut components = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            components.push(
                buf.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            );
        }
        Ok(Self {
            grid,
            components,
            seed,
        })
    }

    /// One row per site: site index, coordinates, then component values.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let d = self.grid.dim();
        let mut header = vec!["site".to_string()];
        header.extend((0..d).map(|a| format!("x{a}")));
        header.extend((0..self.components.len()).map(|c| format!("v{c}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.grid.len() {
            let c = self.grid.coords(i);
            let mut row = vec![i.to_string()];
            row.extend(c[..d].iter().map(|x| x.to_string()));
            row.extend(
                self.components
                    .iter()
                    .map(|comp| format!("{:.16e}", comp[i])),
            );
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_roundtrip_with_seed() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        let f = ScalarField::from_fn(g, |c| c[0] as f64 * 0.1 - c[1] as f64 / 3.0);
        let file = FieldFile::from_scalar(&f, Some((42, 7)));
        let mut bytes = Vec::new();
        file.write_to(&mut bytes).unwrap();
        let back = FieldFile::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back.seed, Some((42, 7)));
        assert_eq!(back.into_scalar().unwrap(), f);
    }

    #[test]
    fn rejects_truncated_and_foreign_input() {
        let g = PeriodicGrid::new(1, 4).unwrap();
        let v = VectorField::constant(g, &[1.5]);
        let mut bytes = Vec::new();
        FieldFile::from_vector(&v, None)
            .write_to(&mut bytes)
            .unwrap();
        assert!(FieldFile::read_from(&bytes[..bytes.len() - 3]).is_err());
        bytes[0] = b'X';
        assert!(matches!(
            FieldFile::read_from(bytes.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn csv_has_one_row_per_site() {
        let g = PeriodicGrid::new(2, 4).unwrap();
        let f = ScalarField::constant(g, 1.0);
        let mut out = Vec::new();
        FieldFile::from_scalar(&f, None)
            .write_csv(&mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("site,x0,x1,v0\n"));
    }
}
