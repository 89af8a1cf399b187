use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest supported polynomial degree.
pub const MAX_POLYDEG: usize = 20;

/// Legendre-Gauss-Lobatto collocation basis of degree `N` on `[-1, 1]`.
///
/// Besides nodes, weights and the differentiation matrix it carries the
/// operators used on non-conforming faces and for solution transfer:
///
/// * `forward[b]` interpolates a degree-`N` polynomial onto the nodes of the
///   lower (`b = 0`) or upper (`b = 1`) half interval. It serves both as
///   mortar projection and as refinement interpolation.
/// * `reverse[b]` maps half-interval data back with the weight-scaled adjoint
///   `½ M⁻¹ P_bᵀ M`, so that `Σ_j w_j (R_0 f_0 + R_1 f_1)_j = ½ Σ_i w_i (f_0 + f_1)_i`.
/// * `coarsen[b]` is the exact L2 projection of half-interval polynomials onto
///   the full interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LglBasis {
    polydeg: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    barycentric: Vec<f64>,
    derivative: DMatrix<f64>,
    forward: [DMatrix<f64>; 2],
    reverse: [DMatrix<f64>; 2],
    coarsen: [DMatrix<f64>; 2],
    /// Nodal values to coefficients of the orthonormal Legendre basis.
    nodal_to_modal: DMatrix<f64>,
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut dp_prev, mut dp) = (0.0, 1.0);
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        let dp_next = dp_prev + (2.0 * kf - 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

/// Legendre-Gauss-Lobatto nodes and weights for `n_nodes ≥ 2` points.
pub fn lgl_nodes_weights(n_nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert!(n_nodes >= 2);
    let n = n_nodes - 1;
    let nf = n as f64;
    let mut nodes = vec![0.0; n_nodes];
    let mut weights = vec![0.0; n_nodes];
    // Interior nodes are roots of P_N'; Newton from Chebyshev-Gauss-Lobatto guesses.
    for k in 0..n_nodes {
        let mut x = -(std::f64::consts::PI * k as f64 / nf).cos();
        if k == 0 || k == n {
            x = if k == 0 { -1.0 } else { 1.0 };
        } else {
            let mut converged = false;
            for _ in 0..100 {
                // P_{N+1} - P_{N-1} ∝ (1 - x²) P_N' vanishes at the interior nodes.
                let (p_p1, dp_p1) = legendre(n + 1, x);
                let (p_m1, dp_m1) = legendre(n - 1, x);
                let q = p_p1 - p_m1;
                let dq = dp_p1 - dp_m1;
                let delta = q / dq;
                x -= delta;
                if delta.abs() <= 1e-16 * x.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerical(format!(
                    "LGL node {k} of degree {n} did not converge"
                )));
            }
        }
        nodes[k] = x;
    }
    // Enforce exact symmetry about zero.
    for k in 0..n_nodes / 2 {
        let m = 0.5 * (nodes[n - k] - nodes[k]);
        nodes[k] = -m;
        nodes[n - k] = m;
    }
    if n_nodes % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    for k in 0..n_nodes {
        let (p, _) = legendre(n, nodes[k]);
        weights[k] = 2.0 / (nf * (nf + 1.0) * p * p);
    }
    for k in 0..n_nodes / 2 {
        let w = 0.5 * (weights[k] + weights[n - k]);
        weights[k] = w;
        weights[n - k] = w;
    }
    Ok((nodes, weights))
}

/// Legendre-Gauss nodes and weights.
pub fn gauss_nodes_weights(n_nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nodes = vec![0.0; n_nodes];
    let mut weights = vec![0.0; n_nodes];
    for k in 0..n_nodes {
        let mut x = -(std::f64::consts::PI * (k as f64 + 0.75) / (n_nodes as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre(n_nodes, x);
            let delta = p / dp;
            x -= delta;
            if delta.abs() <= 1e-16 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "Gauss node {k} of {n_nodes} did not converge"
            )));
        }
        let (_, dp) = legendre(n_nodes, x);
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Ok((nodes, weights))
}

pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            1.0 / nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &xk)| nodes[j] - xk)
                .product::<f64>()
        })
        .collect()
}

/// Matrix evaluating the Lagrange interpolant through `nodes` at `targets`.
pub fn interpolation_matrix(nodes: &[f64], bary: &[f64], targets: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(targets.len(), nodes.len());
    for (i, &x) in targets.iter().enumerate() {
        if let Some(j) = nodes.iter().position(|&xj| xj == x) {
            m[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = nodes
            .iter()
            .zip(bary)
            .map(|(&xj, &lj)| lj / (x - xj))
            .collect();
        let total: f64 = terms.iter().sum();
        for (j, t) in terms.iter().enumerate() {
            m[(i, j)] = t / total;
        }
    }
    m
}

fn derivative_matrix(nodes: &[f64], bary: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

impl LglBasis {
    pub fn new(polydeg: usize) -> Result<Self> {
        if !(1..=MAX_POLYDEG).contains(&polydeg) {
            return Err(Error::Config(format!(
                "polydeg must be in 1..={MAX_POLYDEG}, got {polydeg}"
            )));
        }
        let n = polydeg + 1;
        let (nodes, weights) = lgl_nodes_weights(n)?;
        let barycentric = barycentric_weights(&nodes);
        let derivative = derivative_matrix(&nodes, &barycentric);

        let shifted = |offset: f64| -> Vec<f64> { nodes.iter().map(|x| 0.5 * (x + offset)).collect() };
        let forward = [
            interpolation_matrix(&nodes, &barycentric, &shifted(-1.0)),
            interpolation_matrix(&nodes, &barycentric, &shifted(1.0)),
        ];
        let reverse = forward.clone().map(|p| {
            let mut r = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..n {
                    r[(j, i)] = 0.5 * p[(i, j)] * weights[i] / weights[j];
                }
            }
            r
        });

        // Exact L2 projection; N+1 Gauss points integrate degree 2N exactly.
        let (gauss, gauss_w) = gauss_nodes_weights(n + 1)?;
        let at_gauss = interpolation_matrix(&nodes, &barycentric, &gauss);
        let weighted = |m: &DMatrix<f64>| {
            let mut out = m.clone();
            for (q, w) in gauss_w.iter().enumerate() {
                out.row_mut(q).scale_mut(*w);
            }
            out
        };
        let mass = at_gauss.transpose() * weighted(&at_gauss);
        let mass_inv = mass
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular mass matrix".into()))?;
        let coarsen = [-1.0, 1.0].map(|offset| {
            let parent_at_child_gauss: Vec<f64> = gauss.iter().map(|g| 0.5 * (g + offset)).collect();
            let parent_basis = interpolation_matrix(&nodes, &barycentric, &parent_at_child_gauss);
            let rhs = parent_basis.transpose() * weighted(&at_gauss) * 0.5;
            &mass_inv * rhs
        });

        let mut vandermonde = DMatrix::zeros(n, n);
        for (i, &x) in nodes.iter().enumerate() {
            for k in 0..n {
                vandermonde[(i, k)] = legendre(k, x).0 * ((2 * k + 1) as f64 / 2.0).sqrt();
            }
        }
        let nodal_to_modal = vandermonde
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular Vandermonde matrix".into()))?;

        Ok(Self {
            polydeg,
            nodes,
            weights,
            barycentric,
            derivative,
            forward,
            reverse,
            coarsen,
            nodal_to_modal,
        })
    }

    pub fn polydeg(&self) -> usize {
        self.polydeg
    }

    /// Number of nodes per axis, `N + 1`.
    pub fn n_nodes(&self) -> usize {
        self.polydeg + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn derivative(&self) -> &DMatrix<f64> {
        &self.derivative
    }

    pub fn forward(&self, half: usize) -> &DMatrix<f64> {
        &self.forward[half]
    }

    pub fn reverse(&self, half: usize) -> &DMatrix<f64> {
        &self.reverse[half]
    }

    pub fn coarsen(&self, half: usize) -> &DMatrix<f64> {
        &self.coarsen[half]
    }

    pub fn nodal_to_modal(&self) -> &DMatrix<f64> {
        &self.nodal_to_modal
    }

    /// `Q = diag(w) D`.
    pub fn sbp_q(&self) -> DMatrix<f64> {
        let mut q = self.derivative.clone();
        for (i, w) in self.weights.iter().enumerate() {
            q.row_mut(i).scale_mut(*w);
        }
        q
    }

    /// Interpolation matrix from the basis nodes to arbitrary points in `[-1, 1]`.
    pub fn interpolation_to(&self, targets: &[f64]) -> DMatrix<f64> {
        interpolation_matrix(&self.nodes, &self.barycentric, targets)
    }
}
