//! Element volume integrals in reference coordinates.
//!
//! Each kernel subtracts its contribution from `du`, so callers may accumulate
//! several terms into the same buffer. Rows of `D` sum to zero, so sums are
//! taken over differences to the diagonal flux; a constant state then gives
//! exactly zero.

use super::{lines, LglBasis};
use crate::equations::{EquationSet, NumericalFlux, Vars, MAX_NVARS};
use crate::error::Result;

fn node_fluxes(eq: &EquationSet, u: &[Vars], axis: usize) -> Result<Vec<Vars>> {
    u.iter()
        .enumerate()
        .map(|(i, s)| eq.physical_flux(s, axis).map_err(|e| e.at(0, i)))
        .collect()
}

#[inline]
fn axpy(y: &mut Vars, a: f64, x: &Vars, nvars: usize) {
    for v in 0..nvars {
        y[v] += a * x[v];
    }
}

/// `du_i -= Σ_l D_il (f(u_l) − f(u_i))` along every axis.
pub fn volume_integral_weak_form(
    basis: &LglBasis,
    eq: &EquationSet,
    ndims: usize,
    u: &[Vars],
    du: &mut [Vars],
) -> Result<()> {
    let d = basis.derivative();
    let n = basis.n_nodes();
    let nvars = eq.nvars();
    for axis in 0..ndims {
        let f = node_fluxes(eq, u, axis)?;
        for (base, stride) in lines(ndims, n, axis) {
            for i in 0..n {
                let mut acc = [0.0; MAX_NVARS];
                let fi = &f[base + i * stride];
                for l in 0..n {
                    let fl = &f[base + l * stride];
                    for v in 0..nvars {
                        acc[v] += d[(i, l)] * (fl[v] - fi[v]);
                    }
                }
                axpy(&mut du[base + i * stride], -1.0, &acc, nvars);
            }
        }
    }
    Ok(())
}

/// `du_i -= 2 Σ_l D_il (F(u_i, u_l) − F(u_i, u_i))` along every axis, with a
/// symmetric consistent `F`.
pub fn volume_integral_flux_diff(
    basis: &LglBasis,
    eq: &EquationSet,
    volume_flux: NumericalFlux,
    ndims: usize,
    u: &[Vars],
    du: &mut [Vars],
) -> Result<()> {
    let d = basis.derivative();
    let n = basis.n_nodes();
    let nvars = eq.nvars();
    let mut diag = vec![[0.0; MAX_NVARS]; n];
    for axis in 0..ndims {
        for (base, stride) in lines(ndims, n, axis) {
            let node = |k: usize| base + k * stride;
            for (i, fi) in diag.iter_mut().enumerate() {
                *fi = volume_flux
                    .eval(eq, &u[node(i)], &u[node(i)], axis)
                    .map_err(|e| e.at(0, node(i)))?;
            }
            for i in 0..n {
                for l in i + 1..n {
                    let f = volume_flux
                        .eval(eq, &u[node(i)], &u[node(l)], axis)
                        .map_err(|e| e.at(0, node(l)))?;
                    let (a, b) = (-2.0 * d[(i, l)], -2.0 * d[(l, i)]);
                    for v in 0..nvars {
                        du[node(i)][v] += a * (f[v] - diag[i][v]);
                        du[node(l)][v] += b * (f[v] - diag[l][v]);
                    }
                }
            }
        }
    }
    Ok(())
}

/// First-order sub-cell finite volume term on the LGL sub-cells.
/// The outermost sub-cell faces carry the consistent values `F(u_0, u_0)` and
/// `F(u_N, u_N)`, so the element integral telescopes to the same boundary terms
/// as the DG volume integral.
fn volume_integral_subcell_fv(
    basis: &LglBasis,
    eq: &EquationSet,
    fv_flux: NumericalFlux,
    ndims: usize,
    u: &[Vars],
    du: &mut [Vars],
) -> Result<()> {
    let w = basis.weights();
    let n = basis.n_nodes();
    let nvars = eq.nvars();
    let mut fhat = vec![[0.0; MAX_NVARS]; n + 1];
    for axis in 0..ndims {
        for (base, stride) in lines(ndims, n, axis) {
            let node = |k: usize| base + k * stride;
            fhat[0] = fv_flux.eval(eq, &u[node(0)], &u[node(0)], axis).map_err(|e| e.at(0, node(0)))?;
            fhat[n] = fv_flux
                .eval(eq, &u[node(n - 1)], &u[node(n - 1)], axis)
                .map_err(|e| e.at(0, node(n - 1)))?;
            for k in 1..n {
                fhat[k] = fv_flux
                    .eval(eq, &u[node(k - 1)], &u[node(k)], axis)
                    .map_err(|e| e.at(0, node(k)))?;
            }
            for i in 0..n {
                let target = &mut du[node(i)];
                for v in 0..nvars {
                    target[v] -= (fhat[i + 1][v] - fhat[i][v]) / w[i];
                }
            }
        }
    }
    Ok(())
}

/// `(1 − α)·` flux differencing `+ α·` sub-cell finite volumes.
#[allow(clippy::too_many_arguments)]
pub fn volume_integral_blended(
    basis: &LglBasis,
    eq: &EquationSet,
    volume_flux: NumericalFlux,
    fv_flux: NumericalFlux,
    alpha: f64,
    ndims: usize,
    u: &[Vars],
    du: &mut [Vars],
) -> Result<()> {
    if alpha == 0.0 {
        return volume_integral_flux_diff(basis, eq, volume_flux, ndims, u, du);
    }
    let nvars = eq.nvars();
    let mut fv = vec![[0.0; MAX_NVARS]; u.len()];
    volume_integral_subcell_fv(basis, eq, fv_flux, ndims, u, &mut fv)?;
    if alpha == 1.0 {
        for (d, f) in du.iter_mut().zip(&fv) {
            axpy(d, 1.0, f, nvars);
        }
        return Ok(());
    }
    let mut dg = vec![[0.0; MAX_NVARS]; u.len()];
    volume_integral_flux_diff(basis, eq, volume_flux, ndims, u, &mut dg)?;
    for ((d, g), f) in du.iter_mut().zip(&dg).zip(&fv) {
        for v in 0..nvars {
            d[v] += (1.0 - alpha) * g[v] + alpha * f[v];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::node_weights;
    use crate::equations::tests::random_admissible;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zeros(n: usize) -> Vec<Vars> {
        vec![[0.0; MAX_NVARS]; n]
    }

    fn max_diff(a: &[Vars], b: &[Vars]) -> f64 {
        a.iter()
            .zip(b)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_element_gives_zero() {
        let basis = LglBasis::new(4).unwrap();
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let u = vec![[1.0, 0.1, -0.2, 25.025]; 25];
        for kernel in 0..3 {
            let mut du = zeros(25);
            match kernel {
                0 => volume_integral_weak_form(&basis, &eq, 2, &u, &mut du).unwrap(),
                1 => volume_integral_flux_diff(&basis, &eq, NumericalFlux::EntropyConservative, 2, &u, &mut du)
                    .unwrap(),
                _ => volume_integral_blended(
                    &basis,
                    &eq,
                    NumericalFlux::EntropyConservative,
                    NumericalFlux::LaxFriedrichs,
                    1.0,
                    2,
                    &u,
                    &mut du,
                )
                .unwrap(),
            }
            assert!(max_diff(&du, &zeros(25)) < 1e-12, "kernel {kernel}");
        }
    }

    #[test]
    fn weak_form_is_exact_on_linear_data() {
        let basis = LglBasis::new(3).unwrap();
        let eq = EquationSet::linear_advection_1d(2.0).unwrap();
        let u: Vec<Vars> = basis.nodes().iter().map(|&x| [0.5 + 3.0 * x, 0.0, 0.0, 0.0]).collect();
        let mut du = zeros(4);
        volume_integral_weak_form(&basis, &eq, 1, &u, &mut du).unwrap();
        for d in du {
            assert!((d[0] + 6.0).abs() < 1e-13);
        }
    }

    #[test]
    fn central_flux_differencing_equals_weak_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let basis = LglBasis::new(3).unwrap();
        for _ in 0..100 {
            let u: Vec<Vars> = (0..16).map(|_| random_admissible(&eq, &mut rng)).collect();
            let (mut a, mut b) = (zeros(16), zeros(16));
            volume_integral_weak_form(&basis, &eq, 2, &u, &mut a).unwrap();
            volume_integral_flux_diff(&basis, &eq, NumericalFlux::Central, 2, &u, &mut b).unwrap();
            let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
            assert!(max_diff(&a, &b) <= 1e-12 * scale);
        }
    }

    #[test]
    fn blend_with_zero_alpha_is_flux_differencing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let eq = EquationSet::compressible_euler_1d(1.4).unwrap();
        let basis = LglBasis::new(5).unwrap();
        let u: Vec<Vars> = (0..6).map(|_| random_admissible(&eq, &mut rng)).collect();
        let (mut a, mut b) = (zeros(6), zeros(6));
        volume_integral_flux_diff(&basis, &eq, NumericalFlux::EntropyConservative, 1, &u, &mut a).unwrap();
        volume_integral_blended(
            &basis,
            &eq,
            NumericalFlux::EntropyConservative,
            NumericalFlux::Hll,
            0.0,
            1,
            &u,
            &mut b,
        )
        .unwrap();
        assert!(max_diff(&a, &b) <= 1e-14);
    }

    /// The weighted element sum of any blended volume term only depends on the
    /// physical fluxes at the element boundary nodes.
    #[test]
    fn blended_volume_term_telescopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let basis = LglBasis::new(3).unwrap();
        let n = 4;
        let wts = node_weights(&basis, 2);
        let w = basis.weights();
        for _ in 0..20 {
            let alpha: f64 = rng.gen_range(0.0..1.0);
            let u: Vec<Vars> = (0..16).map(|_| random_admissible(&eq, &mut rng)).collect();
            let mut du = zeros(16);
            volume_integral_blended(
                &basis,
                &eq,
                NumericalFlux::EntropyConservative,
                NumericalFlux::LaxFriedrichs,
                alpha,
                2,
                &u,
                &mut du,
            )
            .unwrap();
            for v in 0..4 {
                let total: f64 = wts.iter().zip(&du).map(|(w, d)| w * d[v]).sum();
                let mut oracle = 0.0;
                for k in 0..n {
                    let fx_hi = eq.physical_flux(&u[k * n + n - 1], 0).unwrap()[v];
                    let fx_lo = eq.physical_flux(&u[k * n], 0).unwrap()[v];
                    let fy_hi = eq.physical_flux(&u[(n - 1) * n + k], 1).unwrap()[v];
                    let fy_lo = eq.physical_flux(&u[k], 1).unwrap()[v];
                    oracle -= w[k] * (fx_hi - fx_lo + fy_hi - fy_lo);
                }
                assert!((total - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()), "{total} vs {oracle}");
            }
        }
    }

    #[test]
    fn flux_differencing_with_ec_flux_conserves_entropy_on_element_interior() {
        // Σ_i w_i w(u_i)·du_i equals a pure boundary term (ψ and w·f at the end nodes).
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let eq = EquationSet::compressible_euler_1d(1.4).unwrap();
        let basis = LglBasis::new(4).unwrap();
        let u: Vec<Vars> = (0..5).map(|_| random_admissible(&eq, &mut rng)).collect();
        let mut du = zeros(5);
        volume_integral_flux_diff(&basis, &eq, NumericalFlux::EntropyConservative, 1, &u, &mut du).unwrap();
        let w = basis.weights();
        let ent: f64 = (0..5)
            .map(|i| {
                let e = eq.cons2entropy(&u[i]).unwrap();
                w[i] * (0..3).map(|v| e.w[v] * du[i][v]).sum::<f64>()
            })
            .sum();
        // Boundary oracle: -(w·f − ψ) at the ends, i.e. -(q_N − q_0).
        let q = |s: &Vars| {
            let e = eq.cons2entropy(s).unwrap();
            let f = eq.physical_flux(s, 0).unwrap();
            (0..3).map(|v| e.w[v] * f[v]).sum::<f64>() - e.psi[0]
        };
        let oracle = -(q(&u[4]) - q(&u[0]));
        assert!((ent - oracle).abs() < 1e-11 * (1.0 + oracle.abs()), "{ent} vs {oracle}");
    }
}
