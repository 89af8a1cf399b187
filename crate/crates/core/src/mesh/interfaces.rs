use std::collections::HashMap;

use super::{Neighbor, TreeMesh};
use crate::error::{Error, Result};

/// Face shared by two elements of the same size (or, in 1D, any two elements).
/// `left` lies at the lower coordinate along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConformingInterface {
    pub left: usize,
    pub right: usize,
    pub axis: usize,
}

/// 2D face between one large element and two elements one level finer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MortarInterface {
    pub large: usize,
    /// Ordered by ascending coordinate along the face.
    pub small: [usize; 2],
    pub axis: usize,
    /// Face of the large element carrying the mortar: 0 = lower, 1 = upper.
    pub large_side: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub element: usize,
    pub axis: usize,
    pub side: usize,
}

/// All element faces of a balanced mesh, each listed exactly once.
/// Entries refer to element indices, not cell ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterfaceSet {
    pub conforming: Vec<ConformingInterface>,
    pub mortars: Vec<MortarInterface>,
    pub boundaries: Vec<BoundaryFace>,
}

impl TreeMesh {
    pub fn enumerate_interfaces(&self) -> Result<InterfaceSet> {
        let mut set = InterfaceSet::default();
        let elem = |cell: usize| {
            self.element_of(cell)
                .ok_or_else(|| Error::Invariant(format!("cell {cell} is not a leaf")))
        };
        for (e, &id) in self.leaves.iter().enumerate() {
            let level = self.cells[id].level;
            for axis in 0..self.ndims {
                for side in 0..2 {
                    let n = match self.face_neighbor(id, axis, side) {
                        Neighbor::Boundary => {
                            set.boundaries.push(BoundaryFace { element: e, axis, side });
                            continue;
                        }
                        Neighbor::Cell(n) => n,
                    };
                    let nb = &self.cells[n];
                    if nb.level + 1 < level {
                        return Err(Error::Invariant(format!(
                            "unbalanced mesh: cell {id} (level {level}) next to cell {n} (level {})",
                            nb.level
                        )));
                    }
                    if nb.is_leaf() {
                        // Same-level faces are owned by the lower element; faces
                        // towards a coarser leaf belong to that leaf's mortar.
                        if side == 1 && nb.level == level {
                            set.conforming.push(ConformingInterface {
                                left: e,
                                right: elem(n)?,
                                axis,
                            });
                        }
                        continue;
                    }
                    let touching = self.face_children(n, axis, 1 - side);
                    if let Some(&c) = touching.iter().find(|&&c| !self.cells[c].is_leaf()) {
                        return Err(Error::Invariant(format!(
                            "unbalanced mesh: cell {id} (level {level}) next to refined cell {c}"
                        )));
                    }
                    if self.ndims == 1 {
                        let small = elem(touching[0])?;
                        let (left, right) = if side == 1 { (e, small) } else { (small, e) };
                        set.conforming.push(ConformingInterface { left, right, axis });
                    } else {
                        set.mortars.push(MortarInterface {
                            large: e,
                            small: [elem(touching[0])?, elem(touching[1])?],
                            axis,
                            large_side: side,
                        });
                    }
                }
            }
        }
        Ok(set)
    }
}

impl InterfaceSet {
    /// Verifies that every element face appears in exactly one entry.
    pub fn check_face_partition(&self, mesh: &TreeMesh) -> Result<()> {
        let mut count: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut hit = |e: usize, axis: usize, side: usize| *count.entry((e, axis, side)).or_default() += 1;
        for f in &self.conforming {
            hit(f.left, f.axis, 1);
            hit(f.right, f.axis, 0);
        }
        for m in &self.mortars {
            hit(m.large, m.axis, m.large_side);
            for &s in &m.small {
                hit(s, m.axis, 1 - m.large_side);
            }
        }
        for b in &self.boundaries {
            hit(b.element, b.axis, b.side);
        }
        for e in 0..mesh.n_elements() {
            for axis in 0..mesh.ndims() {
                for side in 0..2 {
                    let c = count.get(&(e, axis, side)).copied().unwrap_or(0);
                    if c != 1 {
                        return Err(Error::Invariant(format!(
                            "face (element {e}, axis {axis}, side {side}) covered {c} times"
                        )));
                    }
                }
            }
        }
        if count.len() != mesh.n_elements() * mesh.ndims() * 2 {
            return Err(Error::Invariant("interface set references unknown faces".into()));
        }
        for m in &self.mortars {
            let large = mesh.cells()[mesh.leaves()[m.large]].level;
            for &s in &m.small {
                if mesh.cells()[mesh.leaves()[s]].level != large + 1 {
                    return Err(Error::Invariant(format!(
                        "mortar small element {s} is not one level finer than {}",
                        m.large
                    )));
                }
            }
        }
        Ok(())
    }
}
