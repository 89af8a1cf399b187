use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::{EquationSet, Vars, MAX_NVARS};
use crate::error::{Error, Result};

pub type InitialFn = dyn Fn(&[f64], f64) -> Vars + Send + Sync;
pub type SourceFn = dyn Fn(f64, &[f64], &Vars) -> Vars + Send + Sync;

/// Names accepted by [`builtin_initial_condition`].
pub const BUILTIN_INITIAL_CONDITIONS: [&str; 5] = [
    "constant",
    "convergence_test",
    "density_wave",
    "kelvin_helmholtz",
    "blast",
];

/// A state field `(x, t) -> u`. When `exact` is set the field solves the PDE
/// (together with its paired source) and doubles as reference solution.
#[derive(Clone)]
pub struct InitialCondition {
    name: String,
    func: Arc<InitialFn>,
    exact: bool,
}

impl InitialCondition {
    pub fn new(
        name: impl Into<String>,
        exact: bool,
        func: impl Fn(&[f64], f64) -> Vars + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            func: Arc::new(func),
            exact,
        }
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64], t: f64) -> Vars {
        (self.func)(x, t)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_exact_solution(&self) -> bool {
        self.exact
    }
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialCondition")
            .field("name", &self.name)
            .field("exact", &self.exact)
            .finish()
    }
}

/// Source term `s(t, x, u)`; the default is the zero source.
#[derive(Clone, Default)]
pub struct SourceTerm(Option<Arc<SourceFn>>);

impl SourceTerm {
    pub fn zero() -> Self {
        Self(None)
    }

    pub fn new(func: impl Fn(f64, &[f64], &Vars) -> Vars + Send + Sync + 'static) -> Self {
        Self(Some(Arc::new(func)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_none()
    }

    #[inline]
    pub fn evaluate(&self, t: f64, x: &[f64], u: &Vars) -> Vars {
        match &self.0 {
            Some(f) => f(t, x, u),
            None => [0.0; MAX_NVARS],
        }
    }
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.0.is_some() { "SourceTerm(..)" } else { "SourceTerm(zero)" })
    }
}

// Manufactured Euler solution: ρ = C + A sin(ω(Σx − t)), v = 1, p = ρ².
const MMS_C: f64 = 2.0;
const MMS_A: f64 = 0.1;
const MMS_OMEGA: f64 = PI;

const BLAST_RADIUS: f64 = 0.1;
const BLAST_INNER_PRESSURE: f64 = 1.0e3;
const BLAST_OUTER_PRESSURE: f64 = 1.0e-1;

fn prim_to_cons(eq: EquationSet, prim: Vars) -> Vars {
    // Built-in fields are admissible by construction; fall back to the raw
    // primitive vector only if a user parameter breaks that.
    eq.prim2cons(&prim).unwrap_or(prim)
}

fn euler_prim(eq: &EquationSet, rho: f64, v: [f64; 2], p: f64) -> Vars {
    if eq.ndims() == 1 {
        [rho, v[0], p, 0.0]
    } else {
        [rho, v[0], v[1], p]
    }
}

pub fn builtin_initial_condition(
    name: &str,
    eq: &EquationSet,
) -> Result<(InitialCondition, SourceTerm)> {
    let eq = *eq;
    let incompatible = || {
        Error::Config(format!(
            "initial condition '{name}' is not available for {}",
            eq.name()
        ))
    };
    let ndims = eq.ndims();

    match name {
        "constant" => {
            let state = if eq.is_euler() {
                prim_to_cons(eq, euler_prim(&eq, 1.0, [0.1, -0.2], 10.0))
            } else {
                [1.0, 0.0, 0.0, 0.0]
            };
            Ok((
                InitialCondition::new(name, true, move |_, _| state),
                SourceTerm::zero(),
            ))
        }
        "convergence_test" => match eq {
            EquationSet::LinearAdvection1D { velocity } => Ok((
                InitialCondition::new(name, true, move |x, t| {
                    [1.0 + 0.5 * (PI * (x[0] - velocity * t)).sin(), 0.0, 0.0, 0.0]
                }),
                SourceTerm::zero(),
            )),
            EquationSet::LinearAdvection2D { velocity } => Ok((
                InitialCondition::new(name, true, move |x, t| {
                    let phase = (x[0] - velocity[0] * t) + (x[1] - velocity[1] * t);
                    [1.0 + 0.5 * (PI * phase).sin(), 0.0, 0.0, 0.0]
                }),
                SourceTerm::zero(),
            )),
            EquationSet::Burgers1D => Ok((
                // u = 2 + sin(π(x − t)) with s = π cos(π(x − t)) (u − 1)
                InitialCondition::new(name, true, |x, t| {
                    [2.0 + (PI * (x[0] - t)).sin(), 0.0, 0.0, 0.0]
                }),
                SourceTerm::new(|t, x, _u| {
                    let phase = PI * (x[0] - t);
                    let u = 2.0 + phase.sin();
                    [PI * phase.cos() * (u - 1.0), 0.0, 0.0, 0.0]
                }),
            )),
            EquationSet::CompressibleEuler1D { gamma } | EquationSet::CompressibleEuler2D { gamma } => {
                let ic = InitialCondition::new(name, true, move |x, t| {
                    let phase = MMS_OMEGA * (x[..ndims].iter().sum::<f64>() - t);
                    let rho = MMS_C + MMS_A * phase.sin();
                    prim_to_cons(eq, euler_prim(&eq, rho, [1.0, 1.0], rho * rho))
                });
                let source = SourceTerm::new(move |t, x, _u| {
                    let phase = MMS_OMEGA * (x[..ndims].iter().sum::<f64>() - t);
                    let rho = MMS_C + MMS_A * phase.sin();
                    let g = MMS_OMEGA * MMS_A * phase.cos();
                    if ndims == 1 {
                        [0.0, 2.0 * rho * g, 2.0 * rho * g, 0.0]
                    } else {
                        let mom = g + 2.0 * rho * g;
                        [g, mom, mom, g + 2.0 * rho * g / (gamma - 1.0) + 4.0 * rho * g]
                    }
                });
                Ok((ic, source))
            }
        },
        "density_wave" => {
            if !eq.is_euler() {
                return Err(incompatible());
            }
            let v = [0.1, 0.2];
            Ok((
                InitialCondition::new(name, true, move |x, t| {
                    let phase: f64 = (0..ndims).map(|d| x[d] - v[d] * t).sum();
                    let rho = 1.0 + 0.98 * (2.0 * PI * phase).sin();
                    prim_to_cons(eq, euler_prim(&eq, rho, v, 20.0))
                }),
                SourceTerm::zero(),
            ))
        }
        "kelvin_helmholtz" => {
            if !matches!(eq, EquationSet::CompressibleEuler2D { .. }) {
                return Err(incompatible());
            }
            Ok((
                InitialCondition::new(name, false, move |x, _t| {
                    let slope = 15.0;
                    let b = (slope * x[1] + 7.5).tanh() - (slope * x[1] - 7.5).tanh();
                    let rho = 0.5 + 0.75 * b;
                    let v1 = 0.5 * (b - 1.0);
                    let v2 = 0.1 * (2.0 * PI * x[0]).sin();
                    prim_to_cons(eq, [rho, v1, v2, 1.0])
                }),
                SourceTerm::zero(),
            ))
        }
        "blast" => {
            if !eq.is_euler() {
                return Err(incompatible());
            }
            Ok((
                InitialCondition::new(name, false, move |x, _t| {
                    let r = x[..ndims].iter().map(|c| c * c).sum::<f64>().sqrt();
                    let p = if r <= BLAST_RADIUS {
                        BLAST_INNER_PRESSURE
                    } else {
                        BLAST_OUTER_PRESSURE
                    };
                    prim_to_cons(eq, euler_prim(&eq, 1.0, [0.0, 0.0], p))
                }),
                SourceTerm::zero(),
            ))
        }
        _ => Err(Error::Config(format!(
            "unknown initial condition '{name}', expected one of: {}",
            BUILTIN_INITIAL_CONDITIONS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_euler_state() {
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let (ic, src) = builtin_initial_condition("constant", &eq).unwrap();
        let prim = eq.cons2prim(&ic.evaluate(&[0.3, -0.7], 0.4)).unwrap();
        assert_relative_eq!(prim[0], 1.0);
        assert_relative_eq!(prim[1], 0.1, max_relative = 1e-15);
        assert_relative_eq!(prim[2], -0.2, max_relative = 1e-15);
        assert_relative_eq!(prim[3], 10.0, max_relative = 1e-14);
        assert!(src.is_zero());
        assert_eq!(src.evaluate(0.0, &[0.0, 0.0], &[1.0; 4]), [0.0; 4]);
    }

    #[test]
    fn advection_convergence_test_is_translated_profile() {
        let eq = EquationSet::linear_advection_1d(0.5).unwrap();
        let (ic, _) = builtin_initial_condition("convergence_test", &eq).unwrap();
        let x = 0.3;
        let t = 0.8;
        assert_eq!(ic.evaluate(&[x], t)[0], 1.0 + 0.5 * (PI * (x - 0.5 * t)).sin());
        assert!(ic.is_exact_solution());
    }

    #[test]
    fn blast_is_piecewise() {
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let (ic, _) = builtin_initial_condition("blast", &eq).unwrap();
        let outside = eq.cons2prim(&ic.evaluate(&[0.5, 0.5], 0.0)).unwrap();
        assert_relative_eq!(outside[3], 0.1, max_relative = 1e-14);
        assert_eq!(outside[0], 1.0);
        let inside = eq.cons2prim(&ic.evaluate(&[0.05, 0.0], 0.0)).unwrap();
        assert_relative_eq!(inside[3], 1e3, max_relative = 1e-14);
        assert!(!ic.is_exact_solution());
    }

    #[test]
    fn incompatible_or_unknown_names_fail() {
        let adv = EquationSet::linear_advection_1d(1.0).unwrap();
        assert!(matches!(
            builtin_initial_condition("blast", &adv),
            Err(Error::Config(_))
        ));
        let e1 = EquationSet::compressible_euler_1d(1.4).unwrap();
        assert!(builtin_initial_condition("kelvin_helmholtz", &e1).is_err());
        assert!(builtin_initial_condition("sod", &e1).is_err());
    }

    /// Residual `∂t u + Σ ∂j f^j(u) − s` of the manufactured solutions,
    /// with derivatives taken by centered finite differences.
    fn manufactured_residual(eq: EquationSet, x: &[f64], t: f64) -> Vars {
        let (ic, src) = builtin_initial_condition("convergence_test", &eq).unwrap();
        let h = 1e-5;
        let mut res = [0.0; MAX_NVARS];
        let up = ic.evaluate(x, t + h);
        let um = ic.evaluate(x, t - h);
        for v in 0..eq.nvars() {
            res[v] += (up[v] - um[v]) / (2.0 * h);
        }
        for d in 0..eq.ndims() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[d] += h;
            xm[d] -= h;
            let fp = eq.physical_flux(&ic.evaluate(&xp, t), d).unwrap();
            let fm = eq.physical_flux(&ic.evaluate(&xm, t), d).unwrap();
            for v in 0..eq.nvars() {
                res[v] += (fp[v] - fm[v]) / (2.0 * h);
            }
        }
        let s = src.evaluate(t, x, &ic.evaluate(x, t));
        for v in 0..eq.nvars() {
            res[v] -= s[v];
        }
        res
    }

    #[test]
    fn manufactured_sources_cancel_pde_residual() {
        let cases = [
            (EquationSet::burgers_1d(), vec![0.3]),
            (EquationSet::compressible_euler_1d(1.4).unwrap(), vec![-0.45]),
            (EquationSet::compressible_euler_2d(1.4).unwrap(), vec![0.2, -0.65]),
            (EquationSet::linear_advection_2d([0.3, -0.8]).unwrap(), vec![0.2, 0.1]),
        ];
        for (eq, x) in cases {
            for t in [0.0, 0.37, 1.1] {
                let r = manufactured_residual(eq, &x, t);
                for v in 0..eq.nvars() {
                    assert!(r[v].abs() < 1e-7, "{} var {v}: residual {}", eq.name(), r[v]);
                }
            }
        }
    }
}
