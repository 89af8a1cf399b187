//! Hierarchical Cartesian tree meshes: binary trees in 1D, quadtrees in 2D.
//!
//! Cells live in a flat array with explicit parent/child ids. Removing cells
//! (coarsening) compacts the array immediately, so ids stay dense but are not
//! stable across coarsening. The leaves, in depth-first order, are the
//! elements of the discretization.
//!
//! Refinement enforces 2:1 face balance eagerly: a leaf is only split after all
//! face neighbours are at least at its level, which may transitively refine
//! neighbours. Coarsening requests that would break the balance are skipped.

mod interfaces;
mod snapshot;

pub use interfaces::{BoundaryFace, ConformingInterface, InterfaceSet, MortarInterface};

use crate::error::{Error, Result};

/// Refinement depth limit; keeps integer cell coordinates far from overflow.
pub const MAX_LEVEL: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub level: usize,
    pub parent: Option<usize>,
    /// Empty for leaves, `2^d` ids otherwise. Child `k` has offset bit `(k >> a) & 1` along axis `a`.
    pub children: Vec<usize>,
    /// Integer position of the cell among the `2^level` cells per axis at its level.
    pub index: [u64; 2],
}

impl Cell {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub center: [f64; 2],
    pub edge: f64,
    /// Determinant of the reference-to-physical map, `(edge/2)^d`.
    pub jacobian: f64,
}

/// Result of a coarsening request.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoarsenReport {
    /// Ids (before compaction) of the removed child cells.
    pub removed: Vec<usize>,
    /// Requested parent ids that were not coarsened.
    pub skipped: Vec<usize>,
}

/// What lies across a face of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Neighbor {
    Boundary,
    /// The deepest existing cell at a level not finer than the querying cell.
    Cell(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeMesh {
    ndims: usize,
    coords_min: [f64; 2],
    coords_max: [f64; 2],
    periodicity: [bool; 2],
    n_cells_max: usize,
    cells: Vec<Cell>,
    leaves: Vec<usize>,
    element_of_cell: Vec<Option<usize>>,
}

impl TreeMesh {
    /// Builds a uniform tree refined to `initial_refinement_level`.
    pub fn new(
        coords_min: &[f64],
        coords_max: &[f64],
        initial_refinement_level: usize,
        n_cells_max: usize,
        periodicity: &[bool],
    ) -> Result<Self> {
        let ndims = coords_min.len();
        if !(1..=2).contains(&ndims) || coords_max.len() != ndims || periodicity.len() != ndims {
            return Err(Error::Config(format!(
                "mesh needs 1 or 2 dimensions with matching lengths (coords_min {}, coords_max {}, periodicity {})",
                coords_min.len(),
                coords_max.len(),
                periodicity.len()
            )));
        }
        let edges: Vec<f64> = (0..ndims).map(|a| coords_max[a] - coords_min[a]).collect();
        if edges.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::Config(format!(
                "coordinates_max must exceed coordinates_min on every axis, got {coords_min:?} / {coords_max:?}"
            )));
        }
        if ndims == 2 && (edges[0] - edges[1]).abs() > 1e-12 * edges[0] {
            return Err(Error::Config(format!(
                "tree meshes require a square domain, got edges {edges:?}"
            )));
        }
        if initial_refinement_level > MAX_LEVEL {
            return Err(Error::Config(format!(
                "initial_refinement_level {initial_refinement_level} exceeds the maximum {MAX_LEVEL}"
            )));
        }
        let children_per_cell = 1usize << ndims;
        let required: usize = (0..=initial_refinement_level)
            .map(|l| children_per_cell.pow(l as u32))
            .sum();
        if required > n_cells_max {
            return Err(Error::Capacity {
                required,
                allowed: n_cells_max,
            });
        }

        let mut mesh = Self {
            ndims,
            coords_min: [coords_min[0], coords_min.get(1).copied().unwrap_or(0.0)],
            coords_max: [coords_max[0], coords_max.get(1).copied().unwrap_or(0.0)],
            periodicity: [periodicity[0], periodicity.get(1).copied().unwrap_or(false)],
            n_cells_max,
            cells: vec![Cell {
                level: 0,
                parent: None,
                children: Vec::new(),
                index: [0, 0],
            }],
            leaves: Vec::new(),
            element_of_cell: Vec::new(),
        };
        for _ in 0..initial_refinement_level {
            let current: Vec<usize> = (0..mesh.cells.len())
                .filter(|&id| mesh.cells[id].is_leaf())
                .collect();
            for id in current {
                mesh.split(id)?;
            }
        }
        mesh.rebuild_leaves();
        Ok(mesh)
    }

    pub fn ndims(&self) -> usize {
        self.ndims
    }

    pub fn coords_min(&self) -> &[f64] {
        &self.coords_min[..self.ndims]
    }

    pub fn coords_max(&self) -> &[f64] {
        &self.coords_max[..self.ndims]
    }

    pub fn periodicity(&self) -> &[bool] {
        &self.periodicity[..self.ndims]
    }

    pub fn n_cells_max(&self) -> usize {
        self.n_cells_max
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: usize) -> Result<&Cell> {
        self.cells.get(id).ok_or(Error::Index {
            index: id,
            len: self.cells.len(),
        })
    }

    /// Leaf cell ids in element order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn n_elements(&self) -> usize {
        self.leaves.len()
    }

    /// Element index of a leaf cell.
    pub fn element_of(&self, cell: usize) -> Option<usize> {
        self.element_of_cell.get(cell).copied().flatten()
    }

    pub fn domain_edge(&self) -> f64 {
        self.coords_max[0] - self.coords_min[0]
    }

    pub fn domain_measure(&self) -> f64 {
        self.domain_edge().powi(self.ndims as i32)
    }

    pub fn edge_at_level(&self, level: usize) -> f64 {
        self.domain_edge() / (1u64 << level) as f64
    }

    pub fn cell_geometry(&self, id: usize) -> Result<CellGeometry> {
        let cell = self.cell(id)?;
        let edge = self.edge_at_level(cell.level);
        let mut center = [0.0; 2];
        for a in 0..self.ndims {
            center[a] = self.coords_min[a] + (cell.index[a] as f64 + 0.5) * edge;
        }
        Ok(CellGeometry {
            center,
            edge,
            jacobian: (0.5 * edge).powi(self.ndims as i32),
        })
    }

    pub fn max_leaf_level(&self) -> usize {
        self.leaves.iter().map(|&id| self.cells[id].level).max().unwrap_or(0)
    }

    pub fn min_leaf_level(&self) -> usize {
        self.leaves.iter().map(|&id| self.cells[id].level).min().unwrap_or(0)
    }

    /// Refines the given leaves, plus whatever neighbours the 2:1 balance
    /// requires. Returns every newly created leaf. On error the mesh is unchanged.
    pub fn refine_cells(&mut self, ids: &[usize]) -> Result<Vec<usize>> {
        for &id in ids {
            let cell = self.cell(id)?;
            if !cell.is_leaf() {
                return Err(Error::Usage(format!("cannot refine non-leaf cell {id}")));
            }
            if cell.level >= MAX_LEVEL {
                return Err(Error::Usage(format!(
                    "cell {id} is already at the maximum level {MAX_LEVEL}"
                )));
            }
        }
        let mut work = self.clone();
        let created = work.refine_balanced(ids)?;
        *self = work;
        Ok(created)
    }

    fn refine_balanced(&mut self, ids: &[usize]) -> Result<Vec<usize>> {
        let mut created = Vec::new();
        let mut stack: Vec<usize> = ids.iter().rev().copied().collect();
        while let Some(&id) = stack.last() {
            if !self.cells[id].is_leaf() {
                stack.pop();
                continue;
            }
            let level = self.cells[id].level;
            let mut coarser = Vec::new();
            for axis in 0..self.ndims {
                for side in 0..2 {
                    if let Neighbor::Cell(n) = self.face_neighbor(id, axis, side) {
                        if self.cells[n].level < level && !coarser.contains(&n) {
                            coarser.push(n);
                        }
                    }
                }
            }
            if coarser.is_empty() {
                stack.pop();
                created.extend(self.split(id)?);
            } else {
                stack.extend(coarser);
            }
        }
        created.retain(|&c| self.cells[c].is_leaf());
        self.rebuild_leaves();
        Ok(created)
    }

    fn split(&mut self, id: usize) -> Result<Vec<usize>> {
        let n_children = 1usize << self.ndims;
        let required = self.cells.len() + n_children;
        if required > self.n_cells_max {
            return Err(Error::Capacity {
                required,
                allowed: self.n_cells_max,
            });
        }
        let parent = &self.cells[id];
        let level = parent.level + 1;
        let base = parent.index;
        let first = self.cells.len();
        for k in 0..n_children {
            let mut index = [0u64; 2];
            for a in 0..self.ndims {
                index[a] = 2 * base[a] + ((k >> a) & 1) as u64;
            }
            self.cells.push(Cell {
                level,
                parent: Some(id),
                children: Vec::new(),
                index,
            });
        }
        let children: Vec<usize> = (first..first + n_children).collect();
        self.cells[id].children = children.clone();
        Ok(children)
    }

    /// Coarsens each listed parent whose children are all leaves, skipping
    /// requests that are invalid or would violate the 2:1 balance.
    pub fn coarsen_cells(&mut self, parents: &[usize]) -> CoarsenReport {
        let mut report = CoarsenReport::default();
        let mut deleted = vec![false; self.cells.len()];
        for &p in parents {
            if p >= self.cells.len() || deleted[p] || !self.can_coarsen(p) {
                report.skipped.push(p);
                continue;
            }
            let children = std::mem::take(&mut self.cells[p].children);
            for &c in &children {
                deleted[c] = true;
            }
            report.removed.extend(children);
        }
        if !report.removed.is_empty() {
            self.compact(&deleted);
        }
        self.rebuild_leaves();
        report
    }

    fn can_coarsen(&self, p: usize) -> bool {
        let cell = &self.cells[p];
        if cell.is_leaf() || cell.children.iter().any(|&c| !self.cells[c].is_leaf()) {
            return false;
        }
        // After coarsening, `p` is a leaf at `level`; every face neighbour
        // touching it must be at most one level finer.
        for axis in 0..self.ndims {
            for side in 0..2 {
                if let Neighbor::Cell(n) = self.face_neighbor(p, axis, side) {
                    if self.cells[n].level == cell.level && n != p {
                        for c in self.face_children(n, axis, 1 - side) {
                            if !self.cells[c].is_leaf() {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    fn compact(&mut self, deleted: &[bool]) {
        let mut new_id = vec![usize::MAX; self.cells.len()];
        let mut next = 0;
        for (old, &gone) in deleted.iter().enumerate() {
            if !gone {
                new_id[old] = next;
                next += 1;
            }
        }
        let cells = std::mem::take(&mut self.cells);
        self.cells = cells
            .into_iter()
            .enumerate()
            .filter(|(old, _)| !deleted[*old])
            .map(|(_, mut cell)| {
                cell.parent = cell.parent.map(|p| new_id[p]);
                for c in &mut cell.children {
                    *c = new_id[*c];
                }
                cell
            })
            .collect();
    }

    fn rebuild_leaves(&mut self) {
        self.leaves.clear();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let cell = &self.cells[id];
            if cell.is_leaf() {
                self.leaves.push(id);
            } else {
                stack.extend(cell.children.iter().rev());
            }
        }
        self.element_of_cell = vec![None; self.cells.len()];
        for (e, &id) in self.leaves.iter().enumerate() {
            self.element_of_cell[id] = Some(e);
        }
    }

    /// Integer index of the same-level cell across a face, honouring periodicity.
    fn neighbor_index(&self, level: usize, index: [u64; 2], axis: usize, side: usize) -> Option<[u64; 2]> {
        let n = 1u64 << level;
        let mut idx = index;
        if side == 1 {
            if idx[axis] + 1 == n {
                if !self.periodicity[axis] {
                    return None;
                }
                idx[axis] = 0;
            } else {
                idx[axis] += 1;
            }
        } else if idx[axis] == 0 {
            if !self.periodicity[axis] {
                return None;
            }
            idx[axis] = n - 1;
        } else {
            idx[axis] -= 1;
        }
        Some(idx)
    }

    /// Walks from the root towards `(level, index)` and returns the deepest
    /// existing cell on that path.
    fn descend(&self, level: usize, index: [u64; 2]) -> usize {
        let mut id = 0;
        for l in 0..level {
            let cell = &self.cells[id];
            if cell.is_leaf() {
                break;
            }
            let shift = level - l - 1;
            let mut k = 0;
            for a in 0..self.ndims {
                k |= (((index[a] >> shift) & 1) as usize) << a;
            }
            id = cell.children[k];
        }
        id
    }

    fn face_neighbor(&self, id: usize, axis: usize, side: usize) -> Neighbor {
        let cell = &self.cells[id];
        match self.neighbor_index(cell.level, cell.index, axis, side) {
            None => Neighbor::Boundary,
            Some(idx) => Neighbor::Cell(self.descend(cell.level, idx)),
        }
    }

    /// Children of `id` touching its face `(axis, side)`, ordered by ascending
    /// tangential coordinate.
    fn face_children(&self, id: usize, axis: usize, side: usize) -> Vec<usize> {
        let cell = &self.cells[id];
        (0..cell.children.len())
            .filter(|k| (k >> axis) & 1 == side)
            .map(|k| cell.children[k])
            .collect()
    }

    /// Checks that face-adjacent leaves differ by at most one level.
    pub fn is_balanced(&self) -> bool {
        self.leaves.iter().all(|&id| {
            let level = self.cells[id].level;
            (0..self.ndims).all(|axis| {
                (0..2).all(|side| match self.face_neighbor(id, axis, side) {
                    Neighbor::Boundary => true,
                    Neighbor::Cell(n) => {
                        let nb = &self.cells[n];
                        if nb.level + 1 < level {
                            return false;
                        }
                        if nb.is_leaf() || nb.level < level {
                            return true;
                        }
                        self.face_children(n, axis, 1 - side)
                            .iter()
                            .all(|&c| self.cells[c].is_leaf())
                    }
                })
            })
        })
    }

    /// Leaf containing a physical point (points on shared faces go to the upper cell).
    pub fn find_leaf(&self, point: &[f64]) -> Option<usize> {
        for a in 0..self.ndims {
            if point[a] < self.coords_min[a] || point[a] > self.coords_max[a] {
                return None;
            }
        }
        let mut id = 0;
        loop {
            let cell = &self.cells[id];
            if cell.is_leaf() {
                return Some(id);
            }
            let center = self.cell_geometry(id).ok()?.center;
            let mut k = 0;
            for a in 0..self.ndims {
                if point[a] >= center[a] {
                    k |= 1 << a;
                }
            }
            id = cell.children[k];
        }
    }

    /// Parents whose children are all leaves.
    pub fn coarsenable_parents(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&id| {
                let c = &self.cells[id];
                !c.is_leaf() && c.children.iter().all(|&k| self.cells[k].is_leaf())
            })
            .collect()
    }
}
