//! Solution transfer between parent and child elements.

use nalgebra::DMatrix;

use super::LglBasis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferDirection {
    Refine,
    Coarsen,
}

/// Applies one matrix per axis (tensor product) to element data laid out as
/// `(node, var)`. Matrices may be rectangular, mapping `ncols` input nodes to
/// `nrows` output nodes per axis.
pub(crate) fn apply_tensor(mats: &[&DMatrix<f64>], ndims: usize, nvars: usize, input: &[f64]) -> Vec<f64> {
    let mx = mats[0];
    let (nx_out, nx_in) = mx.shape();
    let count = if ndims == 1 { 1 } else { mats[1].ncols() };
    let mut tmp = vec![0.0; count * nx_out * nvars];
    for j in 0..count {
        for i in 0..nx_out {
            let out = (j * nx_out + i) * nvars;
            for k in 0..nx_in {
                let c = mx[(i, k)];
                let inp = (j * nx_in + k) * nvars;
                for v in 0..nvars {
                    tmp[out + v] += c * input[inp + v];
                }
            }
        }
    }
    if ndims == 1 {
        return tmp;
    }
    let my = mats[1];
    let ny_out = my.nrows();
    let mut result = vec![0.0; ny_out * nx_out * nvars];
    for jo in 0..ny_out {
        for j in 0..count {
            let c = my[(jo, j)];
            for i in 0..nx_out {
                let out = (jo * nx_out + i) * nvars;
                let inp = (j * nx_out + i) * nvars;
                for v in 0..nvars {
                    result[out + v] += c * tmp[inp + v];
                }
            }
        }
    }
    result
}

fn child_half(child: usize, axis: usize) -> usize {
    (child >> axis) & 1
}

/// Interpolates parent data onto the nodes of child `child` (bit `a` of
/// `child` selects the upper half along axis `a`).
pub fn interpolate_to_child(basis: &LglBasis, ndims: usize, nvars: usize, parent: &[f64], child: usize) -> Vec<f64> {
    let mats: Vec<&DMatrix<f64>> = (0..ndims).map(|a| basis.forward(child_half(child, a))).collect();
    apply_tensor(&mats, ndims, nvars, parent)
}

/// L2 projection of the `2^d` children onto the parent polynomial space.
pub fn coarsen_to_parent(basis: &LglBasis, ndims: usize, nvars: usize, children: &[&[f64]]) -> Vec<f64> {
    let mut parent = vec![0.0; children[0].len()];
    for (k, child) in children.iter().enumerate() {
        let mats: Vec<&DMatrix<f64>> = (0..ndims).map(|a| basis.coarsen(child_half(k, a))).collect();
        for (p, c) in parent.iter_mut().zip(apply_tensor(&mats, ndims, nvars, child)) {
            *p += c;
        }
    }
    parent
}

/// Refine: one parent in, `2^d` children out. Coarsen: `2^d` children in, one parent out.
pub fn amr_transfer(
    basis: &LglBasis,
    ndims: usize,
    nvars: usize,
    direction: TransferDirection,
    input: &[&[f64]],
) -> Result<Vec<Vec<f64>>> {
    let len = basis.n_nodes().pow(ndims as u32) * nvars;
    let n_children = 1 << ndims;
    let expected = match direction {
        TransferDirection::Refine => 1,
        TransferDirection::Coarsen => n_children,
    };
    if input.len() != expected || input.iter().any(|s| s.len() != len) {
        return Err(Error::Usage(format!(
            "transfer expects {expected} element(s) of length {len}, got {} of lengths {:?}",
            input.len(),
            input.iter().map(|s| s.len()).collect::<Vec<_>>()
        )));
    }
    Ok(match direction {
        TransferDirection::Refine => (0..n_children)
            .map(|k| interpolate_to_child(basis, ndims, nvars, input[0], k))
            .collect(),
        TransferDirection::Coarsen => vec![coarsen_to_parent(basis, ndims, nvars, input)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{node_weights, reference_nodes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(x: f64, y: f64, c: &[f64]) -> f64 {
        c[0] + c[1] * x + c[2] * y * y * x + c[3] * x.powi(3) - c[4] * y.powi(3)
    }

    fn integral(basis: &LglBasis, ndims: usize, data: &[f64]) -> f64 {
        node_weights(basis, ndims).iter().zip(data).map(|(w, u)| w * u).sum()
    }

    #[test]
    fn refine_then_coarsen_is_identity_on_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for ndims in 1..=2 {
            let basis = LglBasis::new(3).unwrap();
            let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let parent: Vec<f64> = reference_nodes(&basis, ndims)
                .iter()
                .map(|p| poly(p[0], if ndims == 2 { p[1] } else { 0.0 }, &c))
                .collect();
            let children = amr_transfer(&basis, ndims, 1, TransferDirection::Refine, &[&parent]).unwrap();
            assert_eq!(children.len(), 1 << ndims);
            // Children integrate to the parent integral (each child has a quarter/half Jacobian).
            let scale = 0.5f64.powi(ndims as i32);
            let sum: f64 = children.iter().map(|ch| integral(&basis, ndims, ch) * scale).sum();
            assert!((sum - integral(&basis, ndims, &parent)).abs() < 1e-13);
            let refs: Vec<&[f64]> = children.iter().map(|c| c.as_slice()).collect();
            let back = amr_transfer(&basis, ndims, 1, TransferDirection::Coarsen, &refs).unwrap();
            for (a, b) in back[0].iter().zip(&parent) {
                assert!((a - b).abs() < 1e-13, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn refine_constant_gives_constant_children() {
        let basis = LglBasis::new(4).unwrap();
        let parent = vec![2.5; 25 * 2];
        let children = amr_transfer(&basis, 2, 2, TransferDirection::Refine, &[&parent]).unwrap();
        for ch in children {
            assert!(ch.iter().all(|&v| (v - 2.5).abs() < 1e-14));
        }
    }

    #[test]
    fn coarsen_preserves_integral_of_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let basis = LglBasis::new(3).unwrap();
        let children: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..16).map(|_| rng.gen_range(0.0..2.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = children.iter().map(|c| c.as_slice()).collect();
        let parent = amr_transfer(&basis, 2, 1, TransferDirection::Coarsen, &refs).unwrap();
        let child_sum: f64 = children.iter().map(|c| integral(&basis, 2, c) * 0.25).sum();
        let p = integral(&basis, 2, &parent[0]);
        assert!((p - child_sum).abs() <= 1e-13 * child_sum.abs());
    }

    #[test]
    fn shape_mismatch_is_usage_error() {
        let basis = LglBasis::new(2).unwrap();
        let short = vec![0.0; 3];
        assert!(matches!(
            amr_transfer(&basis, 2, 1, TransferDirection::Refine, &[&short]),
            Err(Error::Usage(_))
        ));
        let ok = vec![0.0; 9];
        assert!(amr_transfer(&basis, 2, 1, TransferDirection::Coarsen, &[&ok]).is_err());
    }
}
