//! Physical systems of the form `∂t u + Σ_j ∂_j f^j(u) = s(t, x, u)`.
//!
//! Every system works on fixed-size [`Vars`] arrays; only the first
//! [`EquationSet::nvars`] entries are meaningful, the remainder stays zero.

mod flux;
mod initial;

pub use flux::{
    flux_central, flux_ec, flux_hll, flux_lax_friedrichs, logmean, NumericalFlux,
};
pub use initial::{builtin_initial_condition, InitialCondition, SourceTerm, BUILTIN_INITIAL_CONDITIONS};

use crate::error::{Error, Result};

/// Largest number of conserved variables of any supported system.
pub const MAX_NVARS: usize = 4;

/// Pointwise state or flux vector.
pub type Vars = [f64; MAX_NVARS];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquationSet {
    LinearAdvection1D { velocity: f64 },
    LinearAdvection2D { velocity: [f64; 2] },
    Burgers1D,
    CompressibleEuler1D { gamma: f64 },
    CompressibleEuler2D { gamma: f64 },
}

/// Entropy variables, mathematical entropy and flux potentials of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyData {
    pub w: Vars,
    pub entropy: f64,
    /// `psi[j] = w · f^j - q^j`
    pub psi: [f64; 2],
}

/// Euler primitives in a dimension-agnostic form; `velocity[1]` is zero in 1D.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EulerPrim {
    pub rho: f64,
    pub velocity: [f64; 2],
    pub p: f64,
}

impl EquationSet {
    pub fn linear_advection_1d(velocity: f64) -> Result<Self> {
        if !velocity.is_finite() {
            return Err(Error::Config(format!(
                "advection velocity must be finite, got {velocity}"
            )));
        }
        Ok(Self::LinearAdvection1D { velocity })
    }

    pub fn linear_advection_2d(velocity: [f64; 2]) -> Result<Self> {
        if velocity.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config(format!(
                "advection velocity must be finite, got {velocity:?}"
            )));
        }
        Ok(Self::LinearAdvection2D { velocity })
    }

    pub fn burgers_1d() -> Self {
        Self::Burgers1D
    }

    pub fn compressible_euler_1d(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self::CompressibleEuler1D { gamma })
    }

    pub fn compressible_euler_2d(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self::CompressibleEuler2D { gamma })
    }

    pub fn nvars(&self) -> usize {
        match self {
            Self::LinearAdvection1D { .. } | Self::LinearAdvection2D { .. } | Self::Burgers1D => 1,
            Self::CompressibleEuler1D { .. } => 3,
            Self::CompressibleEuler2D { .. } => 4,
        }
    }

    pub fn ndims(&self) -> usize {
        match self {
            Self::LinearAdvection1D { .. } | Self::Burgers1D | Self::CompressibleEuler1D { .. } => 1,
            Self::LinearAdvection2D { .. } | Self::CompressibleEuler2D { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LinearAdvection1D { .. } => "linear_advection_1d",
            Self::LinearAdvection2D { .. } => "linear_advection_2d",
            Self::Burgers1D => "burgers_1d",
            Self::CompressibleEuler1D { .. } => "compressible_euler_1d",
            Self::CompressibleEuler2D { .. } => "compressible_euler_2d",
        }
    }

    pub fn is_euler(&self) -> bool {
        matches!(
            self,
            Self::CompressibleEuler1D { .. } | Self::CompressibleEuler2D { .. }
        )
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            Self::CompressibleEuler1D { gamma } | Self::CompressibleEuler2D { gamma } => Some(gamma),
            _ => None,
        }
    }

    pub fn conserved_names(&self) -> &'static [&'static str] {
        match self {
            Self::CompressibleEuler1D { .. } => &["rho", "rho_v1", "rho_e"],
            Self::CompressibleEuler2D { .. } => &["rho", "rho_v1", "rho_v2", "rho_e"],
            _ => &["scalar"],
        }
    }

    pub fn primitive_names(&self) -> &'static [&'static str] {
        match self {
            Self::CompressibleEuler1D { .. } => &["rho", "v1", "p"],
            Self::CompressibleEuler2D { .. } => &["rho", "v1", "v2", "p"],
            _ => &["scalar"],
        }
    }

    /// Density, velocity and pressure of an Euler state, checking admissibility.
    pub(crate) fn euler_prim(&self, u: &Vars) -> Result<EulerPrim> {
        let (gamma, velocity, momentum_sq, energy) = match *self {
            Self::CompressibleEuler1D { gamma } => {
                let v1 = u[1] / u[0];
                (gamma, [v1, 0.0], u[1] * v1, u[2])
            }
            Self::CompressibleEuler2D { gamma } => {
                let v1 = u[1] / u[0];
                let v2 = u[2] / u[0];
                (gamma, [v1, v2], u[1] * v1 + u[2] * v2, u[3])
            }
            _ => unreachable!("euler_prim called on a scalar equation"),
        };
        let rho = u[0];
        let p = (gamma - 1.0) * (energy - 0.5 * momentum_sq);
        // Also rejects NaN.
        if !(rho > 0.0 && p > 0.0) || !p.is_finite() || !rho.is_finite() {
            return Err(Error::Admissibility {
                density: rho,
                pressure: p,
                location: None,
            });
        }
        Ok(EulerPrim { rho, velocity, p })
    }

    /// Pressure without the admissibility check (used by the positivity limiter).
    pub fn pressure_unchecked(&self, u: &Vars) -> f64 {
        match *self {
            Self::CompressibleEuler1D { gamma } => (gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0]),
            Self::CompressibleEuler2D { gamma } => {
                (gamma - 1.0) * (u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0])
            }
            _ => f64::NAN,
        }
    }

    pub fn is_admissible(&self, u: &Vars) -> bool {
        let finite = u[..self.nvars()].iter().all(|x| x.is_finite());
        if self.is_euler() {
            finite && self.euler_prim(u).is_ok()
        } else {
            finite
        }
    }

    pub fn physical_flux(&self, u: &Vars, dir: usize) -> Result<Vars> {
        debug_assert!(dir < self.ndims());
        Ok(match *self {
            Self::LinearAdvection1D { velocity } => [velocity * u[0], 0.0, 0.0, 0.0],
            Self::LinearAdvection2D { velocity } => [velocity[dir] * u[0], 0.0, 0.0, 0.0],
            Self::Burgers1D => [0.5 * u[0] * u[0], 0.0, 0.0, 0.0],
            Self::CompressibleEuler1D { .. } => {
                let EulerPrim { velocity, p, .. } = self.euler_prim(u)?;
                let v1 = velocity[0];
                [u[1], u[1] * v1 + p, v1 * (u[2] + p), 0.0]
            }
            Self::CompressibleEuler2D { .. } => {
                let EulerPrim { velocity, p, .. } = self.euler_prim(u)?;
                let vn = velocity[dir];
                let mut f = [u[1 + dir], u[1] * vn, u[2] * vn, vn * (u[3] + p)];
                f[1 + dir] += p;
                f
            }
        })
    }

    pub fn cons2prim(&self, u: &Vars) -> Result<Vars> {
        Ok(match self {
            Self::CompressibleEuler1D { .. } => {
                let q = self.euler_prim(u)?;
                [q.rho, q.velocity[0], q.p, 0.0]
            }
            Self::CompressibleEuler2D { .. } => {
                let q = self.euler_prim(u)?;
                [q.rho, q.velocity[0], q.velocity[1], q.p]
            }
            _ => *u,
        })
    }

    pub fn prim2cons(&self, prim: &Vars) -> Result<Vars> {
        let admissible = |rho: f64, p: f64| {
            if rho > 0.0 && p > 0.0 && rho.is_finite() && p.is_finite() {
                Ok(())
            } else {
                Err(Error::Admissibility {
                    density: rho,
                    pressure: p,
                    location: None,
                })
            }
        };
        Ok(match *self {
            Self::CompressibleEuler1D { gamma } => {
                let [rho, v1, p, _] = *prim;
                admissible(rho, p)?;
                [rho, rho * v1, p / (gamma - 1.0) + 0.5 * rho * v1 * v1, 0.0]
            }
            Self::CompressibleEuler2D { gamma } => {
                let [rho, v1, v2, p] = *prim;
                admissible(rho, p)?;
                [
                    rho,
                    rho * v1,
                    rho * v2,
                    p / (gamma - 1.0) + 0.5 * rho * (v1 * v1 + v2 * v2),
                ]
            }
            _ => *prim,
        })
    }

    /// Mathematical entropy `S(u)`.
    pub fn entropy(&self, u: &Vars) -> Result<f64> {
        Ok(match *self {
            Self::CompressibleEuler1D { gamma } | Self::CompressibleEuler2D { gamma } => {
                let q = self.euler_prim(u)?;
                let s = q.p.ln() - gamma * q.rho.ln();
                -q.rho * s / (gamma - 1.0)
            }
            _ => 0.5 * u[0] * u[0],
        })
    }

    pub fn cons2entropy(&self, u: &Vars) -> Result<EntropyData> {
        Ok(match *self {
            Self::LinearAdvection1D { velocity } => EntropyData {
                w: [u[0], 0.0, 0.0, 0.0],
                entropy: 0.5 * u[0] * u[0],
                psi: [0.5 * velocity * u[0] * u[0], 0.0],
            },
            Self::LinearAdvection2D { velocity } => EntropyData {
                w: [u[0], 0.0, 0.0, 0.0],
                entropy: 0.5 * u[0] * u[0],
                psi: [
                    0.5 * velocity[0] * u[0] * u[0],
                    0.5 * velocity[1] * u[0] * u[0],
                ],
            },
            Self::Burgers1D => EntropyData {
                w: [u[0], 0.0, 0.0, 0.0],
                entropy: 0.5 * u[0] * u[0],
                psi: [u[0] * u[0] * u[0] / 6.0, 0.0],
            },
            Self::CompressibleEuler1D { gamma } | Self::CompressibleEuler2D { gamma } => {
                let EulerPrim { rho, velocity, p } = self.euler_prim(u)?;
                let s = p.ln() - gamma * rho.ln();
                let rho_p = rho / p;
                let v_sq = velocity[0] * velocity[0] + velocity[1] * velocity[1];
                let w1 = (gamma - s) / (gamma - 1.0) - 0.5 * rho_p * v_sq;
                let w = if self.ndims() == 1 {
                    [w1, rho_p * velocity[0], -rho_p, 0.0]
                } else {
                    [w1, rho_p * velocity[0], rho_p * velocity[1], -rho_p]
                };
                // With q^j = v_j S the potential reduces to rho * v_j.
                EntropyData {
                    w,
                    entropy: -rho * s / (gamma - 1.0),
                    psi: [rho * velocity[0], rho * velocity[1]],
                }
            }
        })
    }

    /// Upper bound on the signal speeds of the Riemann problem `(ul, ur)` along `dir`.
    pub fn max_wave_speed(&self, ul: &Vars, ur: &Vars, dir: usize) -> Result<f64> {
        Ok(match *self {
            Self::LinearAdvection1D { velocity } => velocity.abs(),
            Self::LinearAdvection2D { velocity } => velocity[dir].abs(),
            Self::Burgers1D => ul[0].abs().max(ur[0].abs()),
            Self::CompressibleEuler1D { gamma } | Self::CompressibleEuler2D { gamma } => {
                let l = self.euler_prim(ul)?;
                let r = self.euler_prim(ur)?;
                let cl = (gamma * l.p / l.rho).sqrt();
                let cr = (gamma * r.p / r.rho).sqrt();
                (l.velocity[dir].abs() + cl).max(r.velocity[dir].abs() + cr)
            }
        })
    }

    /// Smallest and largest characteristic speed of a single state along `dir`.
    pub(crate) fn wave_speed_range(&self, u: &Vars, dir: usize) -> Result<(f64, f64)> {
        Ok(match *self {
            Self::LinearAdvection1D { velocity } => (velocity, velocity),
            Self::LinearAdvection2D { velocity } => (velocity[dir], velocity[dir]),
            Self::Burgers1D => (u[0], u[0]),
            Self::CompressibleEuler1D { gamma } | Self::CompressibleEuler2D { gamma } => {
                let q = self.euler_prim(u)?;
                let c = (gamma * q.p / q.rho).sqrt();
                (q.velocity[dir] - c, q.velocity[dir] + c)
            }
        })
    }

    pub fn kinetic_energy(&self, u: &Vars) -> f64 {
        match self {
            Self::CompressibleEuler1D { .. } => 0.5 * u[1] * u[1] / u[0],
            Self::CompressibleEuler2D { .. } => 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0],
            _ => 0.5 * u[0] * u[0],
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "ratio of specific heats must be > 1, got {gamma}"
        )))
    }
}
