//! Face coupling: numerical fluxes at conforming faces, mortars and boundaries,
//! returned as strong-form lifting contributions for the face nodes.
//!
//! A face on side 1 (upper) of an element contributes `-(f* − f(u)) / w_end`,
//! a face on side 0 contributes `+(f* − f(u)) / w_end`. The physical flux is
//! taken as the consistent value `f*(u, u)` so that a constant state cancels
//! exactly, also behind a mortar.

use nalgebra::DMatrix;

use crate::equations::{EquationSet, NumericalFlux, Vars, MAX_NVARS};
use crate::error::Result;

fn lift(
    eq: &EquationSet,
    flux: NumericalFlux,
    side: usize,
    fstar: &Vars,
    u: &Vars,
    axis: usize,
    w_end: f64,
) -> Result<Vars> {
    let f = flux.eval(eq, u, u, axis)?;
    let sign = if side == 1 { -1.0 } else { 1.0 };
    let mut out = [0.0; MAX_NVARS];
    for v in 0..eq.nvars() {
        out[v] = sign * (fstar[v] - f[v]) / w_end;
    }
    Ok(out)
}

/// Contributions `(left, right)` for the face nodes of a conforming face.
/// `left` is the element at the lower coordinate.
pub fn conforming_flux(
    eq: &EquationSet,
    flux: NumericalFlux,
    axis: usize,
    w_end: f64,
    left: &[Vars],
    right: &[Vars],
) -> Result<(Vec<Vars>, Vec<Vars>)> {
    let mut out_l = Vec::with_capacity(left.len());
    let mut out_r = Vec::with_capacity(right.len());
    for (ul, ur) in left.iter().zip(right) {
        let fstar = flux.eval(eq, ul, ur, axis)?;
        out_l.push(lift(eq, flux, 1, &fstar, ul, axis, w_end)?);
        out_r.push(lift(eq, flux, 0, &fstar, ur, axis, w_end)?);
    }
    Ok((out_l, out_r))
}

/// Contribution for a boundary face with an external ghost state per node.
pub fn boundary_flux(
    eq: &EquationSet,
    flux: NumericalFlux,
    axis: usize,
    side: usize,
    w_end: f64,
    inner: &[Vars],
    ghost: &[Vars],
) -> Result<Vec<Vars>> {
    inner
        .iter()
        .zip(ghost)
        .map(|(u, g)| {
            let fstar = if side == 1 {
                flux.eval(eq, u, g, axis)?
            } else {
                flux.eval(eq, g, u, axis)?
            };
            lift(eq, flux, side, &fstar, u, axis, w_end)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MortarContribution {
    pub large: Vec<Vars>,
    pub small: Vec<Vec<Vars>>,
}

/// `m · (data − reference)`.
fn apply_deviation(m: &DMatrix<f64>, data: &[Vars], reference: &Vars, nvars: usize) -> Vec<Vars> {
    (0..m.nrows())
        .map(|i| {
            let mut out = [0.0; MAX_NVARS];
            for (j, d) in data.iter().enumerate() {
                let c = m[(i, j)];
                for v in 0..nvars {
                    out[v] += c * (d[v] - reference[v]);
                }
            }
            out
        })
        .collect()
}

/// Non-conforming face. The large-face trace is projected onto each small
/// face with `forward[k]`, the flux is evaluated once per small-face node, and
/// the large element receives `Σ_k reverse[k] f*_k`.
/// `large_side` is the face of the large element (1: the small elements lie above it).
#[allow(clippy::too_many_arguments)]
pub fn mortar_flux(
    eq: &EquationSet,
    flux: NumericalFlux,
    axis: usize,
    large_side: usize,
    w_end: f64,
    large: &[Vars],
    small: &[&[Vars]],
    forward: &[&DMatrix<f64>],
    reverse: &[&DMatrix<f64>],
) -> Result<MortarContribution> {
    let nvars = eq.nvars();
    let mut small_fstar = Vec::with_capacity(small.len());
    let mut small_out = Vec::with_capacity(small.len());
    for (k, us) in small.iter().enumerate() {
        // Rows of `forward` sum to one: project deviations from a reference
        // state so that a constant trace is carried over exactly.
        let mut projected = apply_deviation(forward[k], large, &large[0], nvars);
        for p in projected.iter_mut() {
            for v in 0..nvars {
                p[v] += large[0][v];
            }
        }
        let mut fstar = Vec::with_capacity(us.len());
        let mut contrib = Vec::with_capacity(us.len());
        for (ul, u_small) in projected.iter().zip(us.iter()) {
            let f = if large_side == 1 {
                flux.eval(eq, ul, u_small, axis)?
            } else {
                flux.eval(eq, u_small, ul, axis)?
            };
            contrib.push(lift(eq, flux, 1 - large_side, &f, u_small, axis, w_end)?);
            fstar.push(f);
        }
        small_fstar.push(fstar);
        small_out.push(contrib);
    }
    // The reverse projections together reproduce constants, so each one is
    // applied to the deviation from a common reference.
    let reference = small_fstar[0][0];
    let mut large_fstar = vec![reference; large.len()];
    for (k, fstar) in small_fstar.iter().enumerate() {
        for (acc, r) in large_fstar.iter_mut().zip(apply_deviation(reverse[k], fstar, &reference, nvars)) {
            for v in 0..nvars {
                acc[v] += r[v];
            }
        }
    }
    let large_out = large
        .iter()
        .zip(&large_fstar)
        .map(|(u, f)| lift(eq, flux, large_side, f, u, axis, w_end))
        .collect::<Result<_>>()?;
    Ok(MortarContribution {
        large: large_out,
        small: small_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::LglBasis;
    use crate::equations::tests::random_admissible;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_state_gives_zero_contributions() {
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let basis = LglBasis::new(3).unwrap();
        let u = vec![[1.0, 0.1, -0.2, 25.025]; 4];
        for flux in NumericalFlux::ALL {
            let (l, r) = conforming_flux(&eq, flux, 1, basis.weights()[0], &u, &u).unwrap();
            assert!(l.iter().chain(&r).flatten().all(|x| x.abs() < 1e-12));
            let m = mortar_flux(
                &eq,
                flux,
                0,
                1,
                basis.weights()[0],
                &u,
                &[&u, &u],
                &[basis.forward(0), basis.forward(1)],
                &[basis.reverse(0), basis.reverse(1)],
            )
            .unwrap();
            assert!(m.large.iter().chain(m.small.iter().flatten()).flatten().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn identity_mortar_matches_conforming_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let basis = LglBasis::new(4).unwrap();
        let id = DMatrix::<f64>::identity(5, 5);
        let w = basis.weights()[0];
        for large_side in 0..2 {
            let a: Vec<Vars> = (0..5).map(|_| random_admissible(&eq, &mut rng)).collect();
            let b: Vec<Vars> = (0..5).map(|_| random_admissible(&eq, &mut rng)).collect();
            let m = mortar_flux(&eq, NumericalFlux::Hll, 1, large_side, w, &a, &[&b], &[&id], &[&id]).unwrap();
            let (large_ref, small_ref) = if large_side == 1 {
                conforming_flux(&eq, NumericalFlux::Hll, 1, w, &a, &b).unwrap()
            } else {
                let (l, r) = conforming_flux(&eq, NumericalFlux::Hll, 1, w, &b, &a).unwrap();
                (r, l)
            };
            for (x, y) in m.large.iter().zip(&large_ref).chain(m.small[0].iter().zip(&small_ref)) {
                for v in 0..4 {
                    assert!((x[v] - y[v]).abs() <= 1e-14 * (1.0 + y[v].abs()));
                }
            }
        }
    }
}
