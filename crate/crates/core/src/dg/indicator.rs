//! Modal-energy troubled-cell indicator for shock capturing.

use super::transfer::apply_tensor;
use super::LglBasis;
use crate::equations::{EquationSet, Vars};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorParams {
    /// Upper bound on the blending factor.
    pub alpha_max: f64,
    /// Values below `alpha_min_fraction * alpha_max` are set to zero.
    pub alpha_min_fraction: f64,
    /// Prefactor of the threshold `T(N) = threshold_factor * 10^(-1.8 (N+1)^0.25)`.
    pub threshold_factor: f64,
    /// Logistic sharpness `c`; the default is `ln(1/0.0001 - 1)`.
    pub sharpness: f64,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        Self {
            alpha_max: 0.5,
            alpha_min_fraction: 1e-3,
            threshold_factor: 0.5,
            sharpness: 9.21,
        }
    }
}

impl IndicatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha_max) {
            return Err(Error::Config(format!("alpha_max must lie in [0,1], got {}", self.alpha_max)));
        }
        if !(self.alpha_min_fraction >= 0.0 && self.threshold_factor > 0.0 && self.sharpness > 0.0) {
            return Err(Error::Config(
                "indicator needs alpha_min_fraction >= 0, threshold_factor > 0 and sharpness > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn threshold(&self, polydeg: usize) -> f64 {
        self.threshold_factor * 10f64.powf(-1.8 * ((polydeg + 1) as f64).powf(0.25))
    }
}

/// Blending factor `α ∈ [0, alpha_max]` of one element.
pub fn shock_indicator(
    basis: &LglBasis,
    eq: &EquationSet,
    ndims: usize,
    params: &IndicatorParams,
    u: &[Vars],
) -> Result<f64> {
    let indicator: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if eq.is_euler() {
                let rho = s[0];
                eq.euler_prim(s).map(|p| rho * p.p).map_err(|e| e.at(0, i))
            } else {
                Ok(s[0])
            }
        })
        .collect::<Result<_>>()?;
    let v = basis.nodal_to_modal();
    let mats = [v, v];
    let modal = apply_tensor(&mats[..ndims], ndims, 1, &indicator);

    let n = basis.n_nodes();
    let degree = |k: usize| if ndims == 1 { k } else { (k % n).max(k / n) };
    let (mut total, mut clip1, mut clip2) = (0.0, 0.0, 0.0);
    for (k, m) in modal.iter().enumerate() {
        let e = m * m;
        total += e;
        if degree(k) + 1 < n {
            clip1 += e;
        }
        if degree(k) + 2 < n {
            clip2 += e;
        }
    }
    let frac = |num: f64, den: f64| if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    let energy = frac(total - clip1, total).max(frac(clip1 - clip2, clip1));

    let threshold = params.threshold(basis.polydeg());
    let alpha = 1.0 / (1.0 + (-params.sharpness * (energy - threshold) / threshold).exp());
    Ok(if alpha < params.alpha_min_fraction * params.alpha_max {
        0.0
    } else {
        alpha.min(params.alpha_max)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::reference_nodes;

    fn scalar_states(values: impl Iterator<Item = f64>) -> Vec<Vars> {
        values.map(|v| [v, 0.0, 0.0, 0.0]).collect()
    }

    #[test]
    fn constant_element_has_zero_alpha() {
        let basis = LglBasis::new(3).unwrap();
        let params = IndicatorParams::default();
        let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
        let u = vec![[1.0, 0.1, -0.2, 25.025]; 16];
        assert_eq!(shock_indicator(&basis, &eq, 2, &params, &u).unwrap(), 0.0);
        let eq = EquationSet::burgers_1d();
        let u = scalar_states(std::iter::repeat(3.0).take(4));
        assert_eq!(shock_indicator(&basis, &eq, 1, &params, &u).unwrap(), 0.0);
    }

    #[test]
    fn smooth_low_degree_data_is_not_flagged() {
        let params = IndicatorParams::default();
        for polydeg in 3..=7 {
            let basis = LglBasis::new(polydeg).unwrap();
            let eq = EquationSet::linear_advection_2d([1.0, 1.0]).unwrap();
            let d = (polydeg - 2) as i32;
            let u = scalar_states(reference_nodes(&basis, 2).iter().map(|p| 1.0 + p[0].powi(d) - 0.3 * p[1]));
            let alpha = shock_indicator(&basis, &eq, 2, &params, &u).unwrap();
            assert!(alpha <= 0.01 * params.alpha_max, "N={polydeg}: {alpha}");
        }
    }

    #[test]
    fn step_data_is_flagged() {
        let params = IndicatorParams {
            alpha_max: 1.0,
            ..Default::default()
        };
        for polydeg in [3, 5, 7] {
            let basis = LglBasis::new(polydeg).unwrap();
            let eq = EquationSet::burgers_1d();
            let u = scalar_states(basis.nodes().iter().map(|&x| if x < 0.1 { 1.0 } else { -1.0 }));
            let alpha = shock_indicator(&basis, &eq, 1, &params, &u).unwrap();
            assert!(alpha >= 0.5 * params.alpha_max, "N={polydeg}: {alpha}");

            let eq = EquationSet::compressible_euler_2d(1.4).unwrap();
            let u: Vec<Vars> = reference_nodes(&basis, 2)
                .iter()
                .map(|p| {
                    let (rho, p) = if p[0] < 0.1 { (1.0, 1.0) } else { (0.125, 0.1) };
                    [rho, 0.0, 0.0, p / 0.4]
                })
                .collect();
            let alpha = shock_indicator(&basis, &eq, 2, &params, &u).unwrap();
            assert!(alpha >= 0.5 * params.alpha_max, "N={polydeg}: {alpha}");
        }
    }

    #[test]
    fn alpha_is_capped() {
        let params = IndicatorParams {
            alpha_max: 0.2,
            ..Default::default()
        };
        let basis = LglBasis::new(3).unwrap();
        let u = scalar_states([1.0, -1.0, 1.0, -1.0].into_iter());
        let alpha = shock_indicator(&basis, &EquationSet::burgers_1d(), 1, &params, &u).unwrap();
        assert_eq!(alpha, 0.2);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = IndicatorParams::default();
        p.alpha_max = -0.1;
        assert!(p.validate().is_err());
        p.alpha_max = 1.0;
        assert!(p.validate().is_ok());
    }
}
