//! Binary mesh snapshot.
//!
//! Layout (all little-endian):
//! `b"TMSH"`, `u32` version, `u32` ndims, `u64` cell count, `u64` n_cells_max,
//! `f64 × 2` coords_min, `f64 × 2` coords_max, `u8 × 2` periodicity,
//! then one 60-byte record per cell: `u32` level, `i64` parent (−1 for none),
//! `i64 × 4` children (−1 for none), `u64 × 2` integer index.

use super::{Cell, TreeMesh};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TMSH";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 16 + 16 + 2;
const RECORD_LEN: usize = 4 + 8 + 32 + 16;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Usage("truncated mesh snapshot".into()))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length checked"))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
}

fn id_or_none(v: i64, n_cells: usize) -> Result<Option<usize>> {
    match v {
        -1 => Ok(None),
        v if v >= 0 && (v as usize) < n_cells => Ok(Some(v as usize)),
        v => Err(Error::Usage(format!("mesh snapshot references invalid cell id {v}"))),
    }
}

impl TreeMesh {
    pub fn to_snapshot(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * self.cells.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.ndims as u32).to_le_bytes());
        out.extend_from_slice(&(self.cells.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_cells_max as u64).to_le_bytes());
        for v in self.coords_min.iter().chain(&self.coords_max) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend(self.periodicity.iter().map(|&p| p as u8));
        for cell in &self.cells {
            out.extend_from_slice(&(cell.level as u32).to_le_bytes());
            out.extend_from_slice(&cell.parent.map_or(-1, |p| p as i64).to_le_bytes());
            for k in 0..4 {
                let child = cell.children.get(k).map_or(-1, |&c| c as i64);
                out.extend_from_slice(&child.to_le_bytes());
            }
            for v in cell.index {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a snapshot; returns the mesh and the number of bytes consumed.
    pub fn from_snapshot(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = Reader { bytes, pos: 0 };
        if &r.take::<4>()? != MAGIC {
            return Err(Error::Usage("not a mesh snapshot (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Usage(format!("unsupported mesh snapshot version {version}")));
        }
        let ndims = r.u32()? as usize;
        if !(1..=2).contains(&ndims) {
            return Err(Error::Usage(format!("invalid snapshot dimension {ndims}")));
        }
        let n_cells = r.u64()? as usize;
        let n_cells_max = r.u64()? as usize;
        let mut coords = [0.0; 4];
        for c in &mut coords {
            *c = r.f64()?;
        }
        let periodicity = [r.u8()? != 0, r.u8()? != 0];
        if n_cells == 0 || bytes.len() < HEADER_LEN + n_cells * RECORD_LEN {
            return Err(Error::Usage("truncated mesh snapshot".into()));
        }
        let n_children = 1usize << ndims;
        let mut cells = Vec::with_capacity(n_cells);
        for _ in 0..n_cells {
            let level = r.u32()? as usize;
            let parent = id_or_none(r.i64()?, n_cells)?;
            let mut children = Vec::new();
            for _ in 0..4 {
                if let Some(c) = id_or_none(r.i64()?, n_cells)? {
                    children.push(c);
                }
            }
            if !children.is_empty() && children.len() != n_children {
                return Err(Error::Usage("mesh snapshot has a partial child set".into()));
            }
            let index = [r.u64()?, r.u64()?];
            cells.push(Cell {
                level,
                parent,
                children,
                index,
            });
        }
        let mut mesh = Self {
            ndims,
            coords_min: [coords[0], coords[1]],
            coords_max: [coords[2], coords[3]],
            periodicity,
            n_cells_max,
            cells,
            leaves: Vec::new(),
            element_of_cell: Vec::new(),
        };
        mesh.rebuild_leaves();
        Ok((mesh, r.pos))
    }
}
