//! Two-point numerical fluxes usable at element surfaces and, when symmetric,
//! inside flux-differencing volume integrals.

use super::{EquationSet, Vars, MAX_NVARS};
use crate::error::{Error, Result};

/// Registered two-point flux functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericalFlux {
    Central,
    LaxFriedrichs,
    Hll,
    EntropyConservative,
}

impl NumericalFlux {
    pub const ALL: [NumericalFlux; 4] = [
        NumericalFlux::Central,
        NumericalFlux::LaxFriedrichs,
        NumericalFlux::Hll,
        NumericalFlux::EntropyConservative,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Central => "flux_central",
            Self::LaxFriedrichs => "flux_lax_friedrichs",
            Self::Hll => "flux_hll",
            Self::EntropyConservative => "flux_ec",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown flux '{name}', expected one of: {}",
                    Self::ALL.map(|f| f.name()).join(", ")
                ))
            })
    }

    /// Symmetric fluxes may be used as volume fluxes.
    pub fn is_symmetric(&self) -> bool {
        matches!(self, Self::Central | Self::EntropyConservative)
    }

    #[inline]
    pub fn eval(&self, eq: &EquationSet, ul: &Vars, ur: &Vars, dir: usize) -> Result<Vars> {
        match self {
            Self::Central => flux_central(eq, ul, ur, dir),
            Self::LaxFriedrichs => flux_lax_friedrichs(eq, ul, ur, dir),
            Self::Hll => flux_hll(eq, ul, ur, dir),
            Self::EntropyConservative => flux_ec(eq, ul, ur, dir),
        }
    }
}

#[inline]
fn zip_map(a: &Vars, b: &Vars, f: impl Fn(f64, f64) -> f64) -> Vars {
    let mut out = [0.0; MAX_NVARS];
    for v in 0..MAX_NVARS {
        out[v] = f(a[v], b[v]);
    }
    out
}

pub fn flux_central(eq: &EquationSet, ul: &Vars, ur: &Vars, dir: usize) -> Result<Vars> {
    let fl = eq.physical_flux(ul, dir)?;
    let fr = eq.physical_flux(ur, dir)?;
    Ok(zip_map(&fl, &fr, |l, r| (l + r) * 0.5))
}

/// Local Lax-Friedrichs (Rusanov) flux.
pub fn flux_lax_friedrichs(eq: &EquationSet, ul: &Vars, ur: &Vars, dir: usize) -> Result<Vars> {
    let fl = eq.physical_flux(ul, dir)?;
    let fr = eq.physical_flux(ur, dir)?;
    let lambda = eq.max_wave_speed(ul, ur, dir)?;
    let mut out = [0.0; MAX_NVARS];
    for v in 0..MAX_NVARS {
        out[v] = 0.5 * (fl[v] + fr[v]) - 0.5 * lambda * (ur[v] - ul[v]);
    }
    Ok(out)
}

/// HLL flux with the simple Davis wave-speed estimates
/// `S_L = min(λ_min(uL), λ_min(uR))`, `S_R = max(λ_max(uL), λ_max(uR))`,
/// clipped so that `S_L ≤ 0 ≤ S_R`.
pub fn flux_hll(eq: &EquationSet, ul: &Vars, ur: &Vars, dir: usize) -> Result<Vars> {
    let fl = eq.physical_flux(ul, dir)?;
    let fr = eq.physical_flux(ur, dir)?;
    let (min_l, max_l) = eq.wave_speed_range(ul, dir)?;
    let (min_r, max_r) = eq.wave_speed_range(ur, dir)?;
    let sl = min_l.min(min_r).min(0.0);
    let sr = max_l.max(max_r).max(0.0);

    if sl >= 0.0 {
        Ok(fl)
    } else if sr <= 0.0 {
        Ok(fr)
    } else if sr - sl < 1e-14 {
        Ok(zip_map(&fl, &fr, |l, r| (l + r) * 0.5))
    } else {
        let inv = 1.0 / (sr - sl);
        let mut out = [0.0; MAX_NVARS];
        for v in 0..MAX_NVARS {
            out[v] = (sr * fl[v] - sl * fr[v] + sl * sr * (ur[v] - ul[v])) * inv;
        }
        Ok(out)
    }
}

/// Entropy-conservative flux. Linear advection uses the central flux, Burgers
/// the classical `(uL² + uL·uR + uR²)/6`, and Euler the kinetic-energy
/// preserving flux built on logarithmic means of density and `ρ/p`.
pub fn flux_ec(eq: &EquationSet, ul: &Vars, ur: &Vars, dir: usize) -> Result<Vars> {
    match *eq {
        EquationSet::LinearAdvection1D { .. } | EquationSet::LinearAdvection2D { .. } => {
            flux_central(eq, ul, ur, dir)
        }
        EquationSet::Burgers1D => {
            // Expression tree kept symmetric in (uL, uR).
            let (a, b) = (ul[0], ur[0]);
            Ok([((a * a + b * b) + a * b) / 6.0, 0.0, 0.0, 0.0])
        }
        EquationSet::CompressibleEuler1D { gamma } | EquationSet::CompressibleEuler2D { gamma } => {
            let l = eq.euler_prim(ul)?;
            let r = eq.euler_prim(ur)?;
            let rho_mean = logmean(l.rho, r.rho)?;
            let inv_rho_p_mean = 1.0 / logmean(l.rho / l.p, r.rho / r.p)?;
            let v1_avg = (l.velocity[0] + r.velocity[0]) * 0.5;
            let v2_avg = (l.velocity[1] + r.velocity[1]) * 0.5;
            let p_avg = (l.p + r.p) * 0.5;
            let velocity_square_avg =
                (l.velocity[0] * r.velocity[0] + l.velocity[1] * r.velocity[1]) * 0.5;
            let vn_l = l.velocity[dir];
            let vn_r = r.velocity[dir];
            let vn_avg = (vn_l + vn_r) * 0.5;

            let f_mass = rho_mean * vn_avg;
            let f_energy = f_mass * (velocity_square_avg + inv_rho_p_mean / (gamma - 1.0))
                + (l.p * vn_r + r.p * vn_l) * 0.5;
            Ok(if eq.ndims() == 1 {
                [f_mass, f_mass * v1_avg + p_avg, f_energy, 0.0]
            } else {
                let mut f = [f_mass, f_mass * v1_avg, f_mass * v2_avg, f_energy];
                f[1 + dir] += p_avg;
                f
            })
        }
    }
}

/// Logarithmic mean `(b − a)/(ln b − ln a)` of two positive numbers.
///
/// Close arguments (`ζ² < 1e-4` with `ζ = (b − a)/(b + a)`) use the truncated
/// series `(a + b) / (2 (1 + ζ²/3 + ζ⁴/5 + ζ⁶/7))`. The result is bit-symmetric
/// in its arguments.
pub fn logmean(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "logarithmic mean needs positive arguments, got ({a}, {b})"
        )));
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let zeta = (hi - lo) / (hi + lo);
    let z2 = zeta * zeta;
    if z2 < 1e-4 {
        let series = 1.0 + z2 * (1.0 / 3.0 + z2 * (1.0 / 5.0 + z2 * (1.0 / 7.0)));
        Ok((lo + hi) / (2.0 * series))
    } else {
        Ok((hi - lo) / ((hi - lo) / lo).ln_1p())
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_admissible;
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_equations() -> Vec<EquationSet> {
        vec![
            EquationSet::linear_advection_1d(1.3).unwrap(),
            EquationSet::linear_advection_2d([0.7, -1.1]).unwrap(),
            EquationSet::burgers_1d(),
            EquationSet::compressible_euler_1d(1.4).unwrap(),
            EquationSet::compressible_euler_2d(1.4).unwrap(),
        ]
    }

    #[test]
    fn consistency_of_all_fluxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for eq in all_equations() {
            for _ in 0..500 {
                let u = random_admissible(&eq, &mut rng);
                for dir in 0..eq.ndims() {
                    let f = eq.physical_flux(&u, dir).unwrap();
                    for flux in NumericalFlux::ALL {
                        let g = flux.eval(&eq, &u, &u, dir).unwrap();
                        for v in 0..eq.nvars() {
                            assert!(
                                (g[v] - f[v]).abs() <= 1e-14 * f[v].abs().max(1.0),
                                "{} {} var {v}: {} vs {}",
                                eq.name(),
                                flux.name(),
                                g[v],
                                f[v]
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_fluxes_are_bit_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for eq in all_equations() {
            for _ in 0..100 {
                let ul = random_admissible(&eq, &mut rng);
                let ur = random_admissible(&eq, &mut rng);
                for dir in 0..eq.ndims() {
                    for flux in [NumericalFlux::Central, NumericalFlux::EntropyConservative] {
                        assert_eq!(
                            flux.eval(&eq, &ul, &ur, dir).unwrap(),
                            flux.eval(&eq, &ur, &ul, dir).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn central_and_lax_friedrichs_examples() {
        let b = EquationSet::burgers_1d();
        let c = flux_central(&b, &[1.0, 0.0, 0.0, 0.0], &[3.0, 0.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(c[0], 2.5);
        let a = EquationSet::linear_advection_1d(1.0).unwrap();
        let lf = flux_lax_friedrichs(&a, &[1.0, 0.0, 0.0, 0.0], &[0.0; 4], 0).unwrap();
        assert_eq!(lf[0], 1.0);
        let lf = flux_lax_friedrichs(&b, &[2.0, 0.0, 0.0, 0.0], &[0.0; 4], 0).unwrap();
        assert_eq!(lf[0], 3.0);
    }

    #[test]
    fn hll_upwinds_supersonic_advection() {
        let a = EquationSet::linear_advection_1d(1.0).unwrap();
        let f = flux_hll(&a, &[0.8, 0.0, 0.0, 0.0], &[0.1, 0.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(f[0], 0.8);
        let a = EquationSet::linear_advection_1d(-2.0).unwrap();
        let f = flux_hll(&a, &[0.8, 0.0, 0.0, 0.0], &[0.1, 0.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(f[0], -0.2);
    }

    #[test]
    fn hll_sod_middle_branch() {
        let eq = EquationSet::compressible_euler_1d(1.4).unwrap();
        let ul = eq.prim2cons(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        let ur = eq.prim2cons(&[0.125, 0.0, 0.1, 0.0]).unwrap();
        let f = flux_hll(&eq, &ul, &ur, 0).unwrap();

        // Independent scalar evaluation of the middle branch.
        let gamma: f64 = 1.4;
        let cl = (gamma * 1.0 / 1.0).sqrt();
        let cr = (gamma * 0.1 / 0.125).sqrt();
        let (sl, sr) = (-cl.max(cr), cl.max(cr));
        let fl = [0.0, 1.0, 0.0];
        let fr = [0.0, 0.1, 0.0];
        let ul3 = [1.0, 0.0, 2.5];
        let ur3 = [0.125, 0.0, 0.25];
        for v in 0..3 {
            let expected = (sr * fl[v] - sl * fr[v] + sl * sr * (ur3[v] - ul3[v])) / (sr - sl);
            assert_relative_eq!(f[v], expected, max_relative = 1e-14, epsilon = 1e-15);
            let bound = f64::max(fl[v], fr[v]).abs() + (sl * sr).abs() * (ur3[v] - ul3[v]).abs();
            assert!(f[v].abs() <= bound);
        }
    }

    #[test]
    fn burgers_ec_example() {
        let b = EquationSet::burgers_1d();
        let f = flux_ec(&b, &[1.0, 0.0, 0.0, 0.0], &[2.0, 0.0, 0.0, 0.0], 0).unwrap();
        assert_relative_eq!(f[0], 7.0 / 6.0, max_relative = 1e-15);
        let psi_l = b.cons2entropy(&[1.0, 0.0, 0.0, 0.0]).unwrap().psi[0];
        let psi_r = b.cons2entropy(&[2.0, 0.0, 0.0, 0.0]).unwrap().psi[0];
        assert_relative_eq!((2.0 - 1.0) * f[0], psi_r - psi_l, max_relative = 1e-15);
    }

    #[test]
    fn tadmor_condition_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for eq in all_equations() {
            for _ in 0..1000 {
                let ul = random_admissible(&eq, &mut rng);
                let ur = random_admissible(&eq, &mut rng);
                let el = eq.cons2entropy(&ul).unwrap();
                let er = eq.cons2entropy(&ur).unwrap();
                for dir in 0..eq.ndims() {
                    let f = flux_ec(&eq, &ul, &ur, dir).unwrap();
                    let jump: f64 = (0..eq.nvars()).map(|v| (er.w[v] - el.w[v]) * f[v]).sum();
                    let dpsi = er.psi[dir] - el.psi[dir];
                    assert!(
                        (jump - dpsi).abs() <= 1e-12 * (1.0 + er.psi[dir].abs() + el.psi[dir].abs()),
                        "{}: {jump} vs {dpsi}",
                        eq.name()
                    );
                }
            }
        }
    }

    #[test]
    fn logmean_examples() {
        assert_eq!(logmean(0.37, 0.37).unwrap(), 0.37);
        assert_relative_eq!(
            logmean(1.0, std::f64::consts::E).unwrap(),
            std::f64::consts::E - 1.0,
            max_relative = 1e-15
        );
        // Reference values from 50-digit arithmetic.
        let cases = [
            (1.0, 1.000000001, 1.000_000_000_500_000_041_286_852_15),
            (1.0, 1.02, 1.009_966_995_836_878_873_797_9),
            (2.0, 2.0001, 2.000_049_999_583_343_855_184),
            (0.3, 7.5, 2.236_805_764_414_602_496_278),
        ];
        for (a, b, exact) in cases {
            let got = logmean(a, b).unwrap();
            assert!(((got - exact) / exact).abs() <= 1e-13, "{a},{b}: {got} vs {exact}");
        }
        assert!(matches!(logmean(0.0, 1.0), Err(Error::Domain(_))));
        assert!(logmean(-1.0, 1.0).is_err());
    }

    #[test]
    fn unknown_flux_name_is_rejected() {
        assert!(NumericalFlux::from_name("flux_roe").is_err());
        for f in NumericalFlux::ALL {
            assert_eq!(NumericalFlux::from_name(f.name()).unwrap(), f);
        }
    }

    proptest! {
        #[test]
        fn logmean_is_bounded_and_symmetric(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
            let m = logmean(a, b).unwrap();
            prop_assert_eq!(m, logmean(b, a).unwrap());
            let tol = 1e-15 * a.max(b);
            prop_assert!(m >= a.min(b) - tol && m <= a.max(b) + tol);
        }
    }
}
