//! Discontinuous Galerkin spectral element operator on tree meshes.
//!
//! All element kernels work in reference coordinates on one element at a time
//! and accumulate into a local `du`; the caller applies the `2/Δx` scaling.
//! The surface coupling uses the strong form: a face contributes
//! `∓ (f* − f(u_own)) / w_end` at the face nodes, which together with the
//! collocated volume terms is algebraically the DGSEM weak form.

mod basis;
mod indicator;
mod limiter;
mod surface;
mod transfer;
mod volume;

pub use basis::{
    barycentric_weights, gauss_nodes_weights, interpolation_matrix, legendre, lgl_nodes_weights, LglBasis,
    MAX_POLYDEG,
};
pub use indicator::{shock_indicator, IndicatorParams};
pub use limiter::{positivity_limiter, LimiterThresholds};
pub use surface::{boundary_flux, conforming_flux, mortar_flux, MortarContribution};
pub(crate) use transfer::apply_tensor;
pub use transfer::{amr_transfer, coarsen_to_parent, interpolate_to_child, TransferDirection};
pub use volume::{
    volume_integral_blended, volume_integral_flux_diff, volume_integral_weak_form,
};

use crate::equations::{NumericalFlux, Vars, MAX_NVARS};
use crate::error::{Error, Result};

/// Nodal coefficients of all elements, laid out `[variable, node, element]`
/// with the variable index fastest. Nodes are numbered `i + (N+1)·j` with `i`
/// running along x.
#[derive(Debug, Clone, PartialEq)]
pub struct StateArray {
    nvars: usize,
    nodes_per_element: usize,
    n_elements: usize,
    data: Vec<f64>,
}

impl AsRef<[f64]> for StateArray {
    fn as_ref(&self) -> &[f64] {
        &self.data
    }
}

impl AsMut<[f64]> for StateArray {
    fn as_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

impl StateArray {
    pub fn zeros(nvars: usize, nodes_per_element: usize, n_elements: usize) -> Self {
        assert!(nvars <= MAX_NVARS);
        Self {
            nvars,
            nodes_per_element,
            n_elements,
            data: vec![0.0; nvars * nodes_per_element * n_elements],
        }
    }

    pub fn from_vec(nvars: usize, nodes_per_element: usize, n_elements: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nvars * nodes_per_element * n_elements || nvars > MAX_NVARS {
            return Err(Error::Usage(format!(
                "state data of length {} does not match {nvars} vars × {nodes_per_element} nodes × {n_elements} elements",
                data.len()
            )));
        }
        Ok(Self {
            nvars,
            nodes_per_element,
            n_elements,
            data,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn nodes_per_element(&self) -> usize {
        self.nodes_per_element
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn element_len(&self) -> usize {
        self.nvars * self.nodes_per_element
    }

    pub fn element(&self, e: usize) -> &[f64] {
        let len = self.element_len();
        &self.data[e * len..(e + 1) * len]
    }

    pub fn element_mut(&mut self, e: usize) -> &mut [f64] {
        let len = self.element_len();
        &mut self.data[e * len..(e + 1) * len]
    }

    #[inline]
    pub fn node(&self, e: usize, node: usize) -> Vars {
        let start = (e * self.nodes_per_element + node) * self.nvars;
        let mut out = [0.0; MAX_NVARS];
        out[..self.nvars].copy_from_slice(&self.data[start..start + self.nvars]);
        out
    }

    #[inline]
    pub fn set_node(&mut self, e: usize, node: usize, value: &Vars) {
        let start = (e * self.nodes_per_element + node) * self.nvars;
        self.data[start..start + self.nvars].copy_from_slice(&value[..self.nvars]);
    }

    /// All nodal states of one element.
    pub fn element_states(&self, e: usize) -> Vec<Vars> {
        read_states(self.element(e), self.nvars)
    }

    pub fn set_element_states(&mut self, e: usize, states: &[Vars]) {
        let nvars = self.nvars;
        write_states(self.element_mut(e), nvars, states);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

pub(crate) fn read_states(slice: &[f64], nvars: usize) -> Vec<Vars> {
    slice
        .chunks_exact(nvars)
        .map(|c| {
            let mut v = [0.0; MAX_NVARS];
            v[..nvars].copy_from_slice(c);
            v
        })
        .collect()
}

pub(crate) fn write_states(slice: &mut [f64], nvars: usize, states: &[Vars]) {
    for (chunk, s) in slice.chunks_exact_mut(nvars).zip(states) {
        chunk.copy_from_slice(&s[..nvars]);
    }
}

/// Volume term of the DG operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeIntegral {
    WeakForm,
    FluxDifferencing {
        volume_flux: NumericalFlux,
    },
    ShockCapturing {
        volume_flux: NumericalFlux,
        fv_flux: NumericalFlux,
        indicator: IndicatorParams,
    },
}

impl VolumeIntegral {
    pub fn name(&self) -> &'static str {
        match self {
            Self::WeakForm => "weak_form",
            Self::FluxDifferencing { .. } => "flux_differencing",
            Self::ShockCapturing { .. } => "shock_capturing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgSolver {
    pub basis: LglBasis,
    pub surface_flux: NumericalFlux,
    pub volume_integral: VolumeIntegral,
}

impl DgSolver {
    pub fn new(polydeg: usize, surface_flux: NumericalFlux, volume_integral: VolumeIntegral) -> Result<Self> {
        match volume_integral {
            VolumeIntegral::WeakForm => {}
            VolumeIntegral::FluxDifferencing { volume_flux } => check_volume_flux(volume_flux)?,
            VolumeIntegral::ShockCapturing {
                volume_flux,
                indicator,
                ..
            } => {
                check_volume_flux(volume_flux)?;
                indicator.validate()?;
            }
        }
        Ok(Self {
            basis: LglBasis::new(polydeg)?,
            surface_flux,
            volume_integral,
        })
    }

    pub fn polydeg(&self) -> usize {
        self.basis.polydeg()
    }
}

fn check_volume_flux(flux: NumericalFlux) -> Result<()> {
    if flux.is_symmetric() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "volume flux must be symmetric (flux_central or flux_ec), got {}",
            flux.name()
        )))
    }
}

/// `(base, stride)` of every node line along `axis` in an element with `n`
/// nodes per axis.
pub(crate) fn lines(ndims: usize, n: usize, axis: usize) -> impl Iterator<Item = (usize, usize)> {
    let count = if ndims == 1 { 1 } else { n };
    (0..count).map(move |k| match (ndims, axis) {
        (1, _) => (0, 1),
        (_, 0) => (k * n, 1),
        _ => (k, n),
    })
}

/// Node indices on face `(axis, side)`, ordered by ascending tangential coordinate.
pub fn face_nodes(ndims: usize, n: usize, axis: usize, side: usize) -> Vec<usize> {
    let end = side * (n - 1);
    match (ndims, axis) {
        (1, _) => vec![end],
        (_, 0) => (0..n).map(|j| j * n + end).collect(),
        _ => (0..n).map(|i| end * n + i).collect(),
    }
}

/// Tensor-product quadrature weight of each element node.
pub fn node_weights(basis: &LglBasis, ndims: usize) -> Vec<f64> {
    let w = basis.weights();
    let n = w.len();
    if ndims == 1 {
        w.to_vec()
    } else {
        (0..n * n).map(|k| w[k % n] * w[k / n]).collect()
    }
}

/// Reference coordinates of each element node.
pub fn reference_nodes(basis: &LglBasis, ndims: usize) -> Vec<[f64; 2]> {
    let x = basis.nodes();
    let n = x.len();
    if ndims == 1 {
        x.iter().map(|&xi| [xi, 0.0]).collect()
    } else {
        (0..n * n).map(|k| [x[k % n], x[k / n]]).collect()
    }
}
