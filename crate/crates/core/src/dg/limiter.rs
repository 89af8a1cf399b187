//! Zhang-Shu type positivity limiter for the Euler equations.

use super::{node_weights, LglBasis, StateArray};
use crate::equations::{EquationSet, Vars, MAX_NVARS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterThresholds {
    pub rho_min: f64,
    pub p_min: f64,
}

impl Default for LimiterThresholds {
    fn default() -> Self {
        Self {
            rho_min: 5e-13,
            p_min: 5e-13,
        }
    }
}

fn blend(mean: &Vars, u: &Vars, theta: f64, nvars: usize) -> Vars {
    let mut out = [0.0; MAX_NVARS];
    for v in 0..nvars {
        out[v] = mean[v] + theta * (u[v] - mean[v]);
    }
    out
}

/// Largest `θ` such that `mean + θ (u_i − mean)` keeps `q ≥ target` at every
/// node, for a concave `q`. Rounding is absorbed by shrinking `θ` further.
fn theta_for(
    states: &[Vars],
    mean: &Vars,
    nvars: usize,
    target: f64,
    q: impl Fn(&Vars) -> f64,
) -> f64 {
    let q_mean = q(mean);
    let mut theta: f64 = 1.0;
    for s in states {
        let qi = q(s);
        if qi < target {
            theta = theta.min((q_mean - target) / (q_mean - qi));
        }
    }
    if theta >= 1.0 {
        return 1.0;
    }
    theta = theta.max(0.0);
    for _ in 0..8 {
        if states.iter().all(|s| q(&blend(mean, s, theta, nvars)) >= target) {
            return theta;
        }
        theta *= 1.0 - 1e-10;
    }
    0.0
}

/// Limits one element in place. Returns whether anything changed.
pub(crate) fn limit_element(
    weights: &[f64],
    eq: &EquationSet,
    thresholds: &LimiterThresholds,
    element: usize,
    states: &mut [Vars],
) -> Result<bool> {
    let nvars = eq.nvars();
    let wsum: f64 = weights.iter().sum();
    let mut mean = [0.0; MAX_NVARS];
    for (w, s) in weights.iter().zip(states.iter()) {
        for v in 0..nvars {
            mean[v] += w * s[v];
        }
    }
    for m in mean.iter_mut().take(nvars) {
        *m /= wsum;
    }
    let p_mean = eq.pressure_unchecked(&mean);
    if !(mean[0] > thresholds.rho_min && p_mean > thresholds.p_min) {
        return Err(Error::Limiter {
            element,
            mean_density: mean[0],
            mean_pressure: p_mean,
        });
    }
    let pressure = |s: &Vars| if s[0] > 0.0 { eq.pressure_unchecked(s) } else { f64::NEG_INFINITY };
    let admissible = |s: &Vars| s[0] >= thresholds.rho_min && pressure(s) >= thresholds.p_min;
    if states.iter().all(admissible) {
        return Ok(false);
    }

    let theta_rho = theta_for(states, &mean, nvars, thresholds.rho_min, |s| s[0]);
    if theta_rho < 1.0 {
        for s in states.iter_mut() {
            *s = blend(&mean, s, theta_rho, nvars);
        }
    }
    let theta_p = theta_for(states, &mean, nvars, thresholds.p_min, pressure);
    if theta_p < 1.0 {
        for s in states.iter_mut() {
            *s = blend(&mean, s, theta_p, nvars);
        }
    }
    Ok(true)
}

/// Applies the limiter to every element. Identity for non-Euler equations.
/// Returns the number of modified elements.
pub fn positivity_limiter(
    basis: &LglBasis,
    eq: &EquationSet,
    ndims: usize,
    thresholds: &LimiterThresholds,
    u: &mut StateArray,
) -> Result<usize> {
    if !eq.is_euler() {
        return Ok(0);
    }
    let weights = node_weights(basis, ndims);
    let mut limited = 0;
    for e in 0..u.n_elements() {
        let mut states = u.element_states(e);
        if limit_element(&weights, eq, thresholds, e, &mut states)? {
            u.set_element_states(e, &states);
            limited += 1;
        }
    }
    Ok(limited)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn weighted_mean(w: &[f64], s: &[Vars], v: usize) -> f64 {
        w.iter().zip(s).map(|(w, s)| w * s[v]).sum::<f64>() / w.iter().sum::<f64>()
    }

    #[test]
    fn admissible_element_is_untouched() {
        let basis = LglBasis::new(3).unwrap();
        let eq = EquationSet::compressible_euler_1d(1.4).unwrap();
        let mut u = StateArray::zeros(3, 4, 1);
        for i in 0..4 {
            u.set_node(0, i, &[1.0 + 0.1 * i as f64, 0.3, 2.5, 0.0]);
        }
        let before = u.clone();
        let n = positivity_limiter(&basis, &eq, 1, &LimiterThresholds::default(), &mut u).unwrap();
        assert_eq!(n, 0);
        assert_eq!(u, before);
    }

    #[test]
    fn density_theta_matches_closed_form() {
        // Element mean ρ̄ = 1 with one negative node; θ = (ρ̄ − ρ_min)/(ρ̄ − ρ_node).
        let basis = LglBasis::new(2).unwrap();
        let w = basis.weights();
        let eq = EquationSet::compressible_euler_1d(1.4).unwrap();
        let rho0 = -0.1;
        let rho2 = 1.0;
        let rho1 = (2.0 - w[0] * rho0 - w[2] * rho2) / w[1];
        let mut states: Vec<Vars> = [rho0, rho1, rho2].iter().map(|&r| [r, 0.0, 10.0, 0.0]).collect();
        let t = LimiterThresholds {
            rho_min: 1e-10,
            p_min: 1e-10,
        };
        assert!(limit_element(w, &eq, &t, 0, &mut states).unwrap());
        let theta: f64 = (1.0 - 1e-10) / 1.1;
        assert!((theta - 0.9090909).abs() < 1e-7);
        let expected = 1.0 + theta * (rho0 - 1.0);
        assert!((states[0][0] - expected).abs() < 1e-12);
        assert!(states[0][0] >= t.rho_min);
    }

    #[test]
    fn randomized_elements_keep_means_and_reach_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis = LglBasis::new(3).unwrap();
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let w = node_weights(&basis, 2);
        let t = LimiterThresholds::default();
        for _ in 0..200 {
            // Perturb an admissible constant so that a few nodes go negative.
            let base = [1.0, 0.2, -0.1, 2.5];
            let mut states: Vec<Vars> = (0..16)
                .map(|_| {
                    let mut s = base;
                    s[0] += rng.gen_range(-1.5..1.5);
                    s[3] += rng.gen_range(-3.0..3.0);
                    s
                })
                .collect();
            let mean0: Vec<f64> = (0..4).map(|v| weighted_mean(&w, &states, v)).collect();
            let mean_state = [mean0[0], mean0[1], mean0[2], mean0[3]];
            if !(mean0[0] > t.rho_min && eq.pressure_unchecked(&mean_state) > t.p_min) {
                assert!(matches!(
                    limit_element(&w, &eq, &t, 7, &mut states),
                    Err(Error::Limiter { element: 7, .. })
                ));
                continue;
            }
            limit_element(&w, &eq, &t, 0, &mut states).unwrap();
            for v in 0..4 {
                let m = weighted_mean(&w, &states, v);
                assert!((m - mean0[v]).abs() <= 1e-14 * (1.0 + mean0[v].abs()), "var {v}");
            }
            for s in &states {
                assert!(s[0] >= t.rho_min);
                assert!(eq.pressure_unchecked(s) >= t.p_min);
            }
        }
    }

    #[test]
    fn scalar_equations_are_identity() {
        let basis = LglBasis::new(2).unwrap();
        let eq = EquationSet::burgers_1d();
        let mut u = StateArray::from_vec(1, 3, 1, vec![-5.0, 1.0, 2.0]).unwrap();
        assert_eq!(positivity_limiter(&basis, &eq, 1, &LimiterThresholds::default(), &mut u).unwrap(), 0);
        assert_eq!(u.as_slice(), &[-5.0, 1.0, 2.0]);
    }
}
