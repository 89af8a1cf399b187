//! Semidiscretization: mesh, equations, initial/boundary data, source and
//! solver bundled into an ODE right-hand side `du/dt = rhs(u, t)`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::dg::{
    apply_tensor, boundary_flux, conforming_flux, coarsen_to_parent, face_nodes, interpolate_to_child, lgl_nodes_weights,
    mortar_flux, node_weights, read_states, reference_nodes, shock_indicator, volume_integral_blended,
    volume_integral_flux_diff, volume_integral_weak_form, write_states, DgSolver, IndicatorParams, StateArray,
    VolumeIntegral,
};
use crate::equations::{EquationSet, InitialCondition, SourceTerm, Vars, MAX_NVARS};
use crate::error::{Error, Location, Result};
use crate::mesh::{CellGeometry, InterfaceSet, TreeMesh};

/// Boundary treatment of one axis.
#[derive(Clone)]
pub enum BoundaryCondition {
    Periodic,
    /// Weakly imposed: the function supplies the outer state fed to the surface flux.
    Dirichlet(InitialCondition),
}

impl std::fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Periodic => write!(f, "Periodic"),
            Self::Dirichlet(ic) => write!(f, "Dirichlet({})", ic.name()),
        }
    }
}

/// Initial state vector and time span.
#[derive(Debug, Clone)]
pub struct OdeProblem {
    pub u0: StateArray,
    pub tspan: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNorms {
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub t: f64,
    /// Empty when the initial condition is not an exact solution.
    pub errors: Option<ErrorNorms>,
    pub totals: Vec<f64>,
    pub entropy: f64,
    pub kinetic_energy: f64,
}

/// Counts of an adaptation step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdaptReport {
    pub refined: usize,
    pub coarsened: usize,
    pub skipped_coarsen: usize,
    pub elements_before: usize,
    pub elements_after: usize,
}

#[derive(Debug, Clone)]
struct Cache {
    interfaces: InterfaceSet,
    geometry: Vec<CellGeometry>,
    /// Physical node coordinates, `nodes_per_element` entries per element.
    coordinates: Vec<[f64; 2]>,
}

#[derive(Clone)]
pub struct Semidiscretization {
    mesh: TreeMesh,
    equations: EquationSet,
    initial_condition: InitialCondition,
    boundary_conditions: Vec<BoundaryCondition>,
    source: SourceTerm,
    solver: DgSolver,
    /// `face_index[axis][side]`: element node indices on that face.
    face_index: Vec<[Vec<usize>; 2]>,
    weights: Vec<f64>,
    cache: Cache,
}

fn relocate(err: Error, element: usize) -> Error {
    match err {
        Error::Admissibility {
            density,
            pressure,
            location,
        } => Error::Admissibility {
            density,
            pressure,
            location: Some(Location {
                element,
                node: location.map_or(0, |l| l.node),
            }),
        },
        other => other,
    }
}

impl Semidiscretization {
    /// Periodic axes get periodic conditions; all others default to Dirichlet
    /// data from the initial condition.
    pub fn new(mesh: TreeMesh, equations: EquationSet, initial_condition: InitialCondition, solver: DgSolver) -> Result<Self> {
        if mesh.ndims() != equations.ndims() {
            return Err(Error::Config(format!(
                "equations {} are {}D but the mesh is {}D",
                equations.name(),
                equations.ndims(),
                mesh.ndims()
            )));
        }
        let ndims = mesh.ndims();
        let boundary_conditions = mesh.periodicity()[..ndims]
            .iter()
            .map(|&p| {
                if p {
                    BoundaryCondition::Periodic
                } else {
                    BoundaryCondition::Dirichlet(initial_condition.clone())
                }
            })
            .collect();
        let n = solver.basis.n_nodes();
        let face_index = (0..ndims)
            .map(|a| [face_nodes(ndims, n, a, 0), face_nodes(ndims, n, a, 1)])
            .collect();
        let weights = node_weights(&solver.basis, ndims);
        let cache = Self::build_cache(&mesh, &solver)?;
        Ok(Self {
            mesh,
            equations,
            initial_condition,
            boundary_conditions,
            source: SourceTerm::zero(),
            solver,
            face_index,
            weights,
            cache,
        })
    }

    pub fn with_boundary_conditions(mut self, bcs: Vec<BoundaryCondition>) -> Result<Self> {
        if bcs.len() != self.ndims() {
            return Err(Error::Config(format!(
                "{} boundary conditions given for a {}D mesh",
                bcs.len(),
                self.ndims()
            )));
        }
        for (axis, bc) in bcs.iter().enumerate() {
            let periodic = self.mesh.periodicity()[axis];
            if periodic != matches!(bc, BoundaryCondition::Periodic) {
                return Err(Error::Config(format!(
                    "axis {axis}: mesh periodicity {periodic} conflicts with boundary condition {bc:?}"
                )));
            }
        }
        self.boundary_conditions = bcs;
        Ok(self)
    }

    pub fn with_source(mut self, source: SourceTerm) -> Self {
        self.source = source;
        self
    }

    fn build_cache(mesh: &TreeMesh, solver: &DgSolver) -> Result<Cache> {
        let interfaces = mesh.enumerate_interfaces()?;
        let geometry = mesh
            .leaves()
            .iter()
            .map(|&id| mesh.cell_geometry(id))
            .collect::<Result<Vec<_>>>()?;
        let reference = reference_nodes(&solver.basis, mesh.ndims());
        let coordinates = geometry
            .iter()
            .flat_map(|g| {
                reference.iter().map(move |xi| {
                    let h = 0.5 * g.edge;
                    [g.center[0] + h * xi[0], g.center[1] + h * xi[1]]
                })
            })
            .collect();
        Ok(Cache {
            interfaces,
            geometry,
            coordinates,
        })
    }

    pub fn mesh(&self) -> &TreeMesh {
        &self.mesh
    }

    pub fn equations(&self) -> &EquationSet {
        &self.equations
    }

    pub fn solver(&self) -> &DgSolver {
        &self.solver
    }

    pub fn initial_condition(&self) -> &InitialCondition {
        &self.initial_condition
    }

    pub fn boundary_conditions(&self) -> &[BoundaryCondition] {
        &self.boundary_conditions
    }

    pub fn source(&self) -> &SourceTerm {
        &self.source
    }

    pub fn interfaces(&self) -> &InterfaceSet {
        &self.cache.interfaces
    }

    pub fn ndims(&self) -> usize {
        self.mesh.ndims()
    }

    pub fn nvars(&self) -> usize {
        self.equations.nvars()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.solver.basis.n_nodes().pow(self.ndims() as u32)
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    /// Degrees of freedom per variable.
    pub fn n_dofs(&self) -> usize {
        self.n_elements() * self.nodes_per_element()
    }

    pub fn element_geometry(&self, element: usize) -> &CellGeometry {
        &self.cache.geometry[element]
    }

    /// Physical coordinates of every node of one element.
    pub fn node_coordinates(&self, element: usize) -> &[[f64; 2]] {
        let nn = self.nodes_per_element();
        &self.cache.coordinates[element * nn..(element + 1) * nn]
    }

    /// Tensor-product LGL weights of the element nodes.
    pub fn node_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn zero_state(&self) -> StateArray {
        StateArray::zeros(self.nvars(), self.nodes_per_element(), self.n_elements())
    }

    /// Nodal interpolation of a function of `(x, t)`, checked for admissibility.
    pub fn project(&self, func: &InitialCondition, t: f64) -> Result<StateArray> {
        let mut u = self.zero_state();
        let ndims = self.ndims();
        let nn = self.nodes_per_element();
        for (k, x) in self.cache.coordinates.iter().enumerate() {
            let value = func.evaluate(&x[..ndims], t);
            let (e, node) = (k / nn, k % nn);
            let finite = value[..self.nvars()].iter().all(|v| v.is_finite());
            if !finite || (self.equations.is_euler() && !self.equations.is_admissible(&value)) {
                let pressure = if self.equations.is_euler() {
                    self.equations.pressure_unchecked(&value)
                } else {
                    f64::NAN
                };
                return Err(Error::Admissibility {
                    density: value[0],
                    pressure,
                    location: Some(Location { element: e, node }),
                });
            }
            u.set_node(e, node, &value);
        }
        Ok(u)
    }

    pub fn semidiscretize(&self, tspan: (f64, f64)) -> Result<OdeProblem> {
        if !(tspan.0.is_finite() && tspan.1.is_finite() && tspan.1 >= tspan.0) {
            return Err(Error::Config(format!("invalid time span ({}, {})", tspan.0, tspan.1)));
        }
        Ok(OdeProblem {
            u0: self.project(&self.initial_condition, tspan.0)?,
            tspan,
        })
    }

    fn check_shape(&self, len: usize) -> Result<()> {
        let expected = self.nvars() * self.n_dofs();
        if len != expected {
            return Err(Error::Usage(format!(
                "state of length {len} does not match the semidiscretization ({expected})"
            )));
        }
        Ok(())
    }

    pub fn rhs(&self, u: &StateArray, t: f64) -> Result<StateArray> {
        let mut du = self.zero_state();
        self.rhs_slice(u.as_slice(), du.as_mut_slice(), t)?;
        Ok(du)
    }

    fn trace(&self, u: &[f64], element: usize, axis: usize, side: usize) -> Vec<Vars> {
        let nvars = self.nvars();
        let base = element * self.nodes_per_element();
        self.face_index[axis][side]
            .iter()
            .map(|&node| {
                let start = (base + node) * nvars;
                let mut s = [0.0; MAX_NVARS];
                s[..nvars].copy_from_slice(&u[start..start + nvars]);
                s
            })
            .collect()
    }

    /// Shock indicator of every element.
    pub fn indicator_values(&self, u: &StateArray, params: &IndicatorParams) -> Result<Vec<f64>> {
        self.check_shape(u.len())?;
        (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                shock_indicator(
                    &self.solver.basis,
                    &self.equations,
                    self.ndims(),
                    params,
                    &u.element_states(e),
                )
                .map_err(|err| relocate(err, e))
            })
            .collect()
    }

    /// Evaluates the right-hand side into `du`. The result does not depend on
    /// the number of threads: element kernels write disjoint slices and face
    /// contributions are scattered in a fixed order.
    pub fn rhs_slice(&self, u: &[f64], du: &mut [f64], t: f64) -> Result<()> {
        self.check_shape(u.len())?;
        self.check_shape(du.len())?;
        let eq = &self.equations;
        let basis = &self.solver.basis;
        let ndims = self.ndims();
        let nvars = self.nvars();
        let elen = nvars * self.nodes_per_element();
        let w_end = basis.weights()[0];
        let flux = self.solver.surface_flux;
        let ifs = &self.cache.interfaces;

        let conforming = ifs
            .conforming
            .par_iter()
            .map(|f| {
                let l = self.trace(u, f.left, f.axis, 1);
                let r = self.trace(u, f.right, f.axis, 0);
                conforming_flux(eq, flux, f.axis, w_end, &l, &r).map_err(|e| relocate(e, f.left))
            })
            .collect::<Result<Vec<_>>>()?;
        let forward = [basis.forward(0), basis.forward(1)];
        let reverse = [basis.reverse(0), basis.reverse(1)];
        let mortars = ifs
            .mortars
            .par_iter()
            .map(|m| {
                let large = self.trace(u, m.large, m.axis, m.large_side);
                let s0 = self.trace(u, m.small[0], m.axis, 1 - m.large_side);
                let s1 = self.trace(u, m.small[1], m.axis, 1 - m.large_side);
                mortar_flux(eq, flux, m.axis, m.large_side, w_end, &large, &[&s0, &s1], &forward, &reverse)
                    .map_err(|e| relocate(e, m.large))
            })
            .collect::<Result<Vec<_>>>()?;
        let boundaries = ifs
            .boundaries
            .par_iter()
            .map(|b| {
                let inner = self.trace(u, b.element, b.axis, b.side);
                let ghost: Vec<Vars> = match &self.boundary_conditions[b.axis] {
                    BoundaryCondition::Dirichlet(func) => {
                        let coords = self.node_coordinates(b.element);
                        self.face_index[b.axis][b.side]
                            .iter()
                            .map(|&node| func.evaluate(&coords[node][..ndims], t))
                            .collect()
                    }
                    BoundaryCondition::Periodic => {
                        return Err(Error::Invariant(format!(
                            "boundary face on periodic axis {}",
                            b.axis
                        )))
                    }
                };
                boundary_flux(eq, flux, b.axis, b.side, w_end, &inner, &ghost).map_err(|e| relocate(e, b.element))
            })
            .collect::<Result<Vec<_>>>()?;

        du.par_chunks_mut(elen)
            .zip(u.par_chunks(elen))
            .enumerate()
            .try_for_each(|(e, (du_e, u_e))| -> Result<()> {
                let states = read_states(u_e, nvars);
                let mut acc = vec![[0.0; MAX_NVARS]; states.len()];
                match self.solver.volume_integral {
                    VolumeIntegral::WeakForm => volume_integral_weak_form(basis, eq, ndims, &states, &mut acc),
                    VolumeIntegral::FluxDifferencing { volume_flux } => {
                        volume_integral_flux_diff(basis, eq, volume_flux, ndims, &states, &mut acc)
                    }
                    VolumeIntegral::ShockCapturing {
                        volume_flux,
                        fv_flux,
                        indicator,
                    } => shock_indicator(basis, eq, ndims, &indicator, &states).and_then(|alpha| {
                        volume_integral_blended(basis, eq, volume_flux, fv_flux, alpha, ndims, &states, &mut acc)
                    }),
                }
                .map_err(|err| relocate(err, e))?;
                write_states(du_e, nvars, &acc);
                Ok(())
            })?;

        let mut scatter = |element: usize, axis: usize, side: usize, contrib: &[Vars]| {
            let base = element * elen;
            for (&node, c) in self.face_index[axis][side].iter().zip(contrib) {
                let start = base + node * nvars;
                for v in 0..nvars {
                    du[start + v] += c[v];
                }
            }
        };
        for (f, (l, r)) in ifs.conforming.iter().zip(&conforming) {
            scatter(f.left, f.axis, 1, l);
            scatter(f.right, f.axis, 0, r);
        }
        for (m, c) in ifs.mortars.iter().zip(&mortars) {
            scatter(m.large, m.axis, m.large_side, &c.large);
            for (k, &s) in m.small.iter().enumerate() {
                scatter(s, m.axis, 1 - m.large_side, &c.small[k]);
            }
        }
        for (b, c) in ifs.boundaries.iter().zip(&boundaries) {
            scatter(b.element, b.axis, b.side, c);
        }

        let nn = self.nodes_per_element();
        du.par_chunks_mut(elen)
            .zip(u.par_chunks(elen))
            .enumerate()
            .for_each(|(e, (du_e, u_e))| {
                let scale = 2.0 / self.cache.geometry[e].edge;
                du_e.iter_mut().for_each(|x| *x *= scale);
                if !self.source.is_zero() {
                    let coords = &self.cache.coordinates[e * nn..(e + 1) * nn];
                    for (node, x) in coords.iter().enumerate() {
                        let mut state = [0.0; MAX_NVARS];
                        state[..nvars].copy_from_slice(&u_e[node * nvars..(node + 1) * nvars]);
                        let s = self.source.evaluate(t, &x[..ndims], &state);
                        for v in 0..nvars {
                            du_e[node * nvars + v] += s[v];
                        }
                    }
                }
            });
        Ok(())
    }

    /// `Σ_e Σ_i w_i J_e q(u_i)`.
    pub fn integrate_quantity(&self, u: &StateArray, quantity: impl Fn(&Vars) -> Result<f64> + Sync) -> Result<f64> {
        self.check_shape(u.len())?;
        let per_element = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let jac = self.cache.geometry[e].jacobian;
                let mut sum = 0.0;
                for (node, w) in self.weights.iter().enumerate() {
                    sum += w * quantity(&u.node(e, node)).map_err(|err| relocate(err, e))?;
                }
                Ok(jac * sum)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(per_element.iter().sum())
    }

    /// Integral of each conserved variable.
    pub fn conserved_totals(&self, u: &StateArray) -> Result<Vec<f64>> {
        (0..self.nvars()).map(|v| self.integrate_quantity(u, |s| Ok(s[v]))).collect()
    }

    pub fn total_entropy(&self, u: &StateArray) -> Result<f64> {
        self.integrate_quantity(u, |s| self.equations.entropy(s))
    }

    pub fn total_kinetic_energy(&self, u: &StateArray) -> Result<f64> {
        self.integrate_quantity(u, |s| Ok(self.equations.kinetic_energy(s)))
    }

    /// `Σ_e Σ_i w_i J_e w(u_i)·du_i`, the semidiscrete rate of change of total entropy.
    pub fn entropy_production(&self, u: &StateArray, du: &StateArray) -> Result<f64> {
        self.check_shape(du.len())?;
        let nvars = self.nvars();
        let mut total = 0.0;
        for e in 0..self.n_elements() {
            let jac = self.cache.geometry[e].jacobian;
            for (node, w) in self.weights.iter().enumerate() {
                let ent = self.equations.cons2entropy(&u.node(e, node)).map_err(|err| relocate(err, e))?;
                let d = du.node(e, node);
                total += w * jac * (0..nvars).map(|v| ent.w[v] * d[v]).sum::<f64>();
            }
        }
        Ok(total)
    }

    /// Mass-normalized L2 and max-norm errors at the solution nodes.
    pub fn compute_errors(&self, u: &StateArray, t: f64, reference: &InitialCondition) -> Result<ErrorNorms> {
        self.check_shape(u.len())?;
        let nvars = self.nvars();
        let ndims = self.ndims();
        let mut l2 = vec![0.0; nvars];
        let mut linf = vec![0.0f64; nvars];
        for e in 0..self.n_elements() {
            let jac = self.cache.geometry[e].jacobian;
            for (node, x) in self.node_coordinates(e).iter().enumerate() {
                let exact = reference.evaluate(&x[..ndims], t);
                let s = u.node(e, node);
                for v in 0..nvars {
                    let d = s[v] - exact[v];
                    l2[v] += self.weights[node] * jac * d * d;
                    linf[v] = linf[v].max(d.abs());
                }
            }
        }
        let measure = self.mesh.domain_measure();
        Ok(ErrorNorms {
            l2: l2.into_iter().map(|x| (x / measure).sqrt()).collect(),
            linf,
        })
    }

    /// Errors measured on `n_analysis` LGL points per axis, which also sees
    /// the interpolation error between the nodes.
    pub fn compute_errors_oversampled(
        &self,
        u: &StateArray,
        t: f64,
        reference: &InitialCondition,
        n_analysis: usize,
    ) -> Result<ErrorNorms> {
        self.check_shape(u.len())?;
        let nvars = self.nvars();
        let ndims = self.ndims();
        let (xa, wa) = lgl_nodes_weights(n_analysis)?;
        let interp = self.solver.basis.interpolation_to(&xa);
        let mats = [&interp, &interp];
        let points: Vec<(f64, [f64; 2])> = if ndims == 1 {
            xa.iter().zip(&wa).map(|(&x, &w)| (w, [x, 0.0])).collect()
        } else {
            (0..n_analysis * n_analysis)
                .map(|k| {
                    let (i, j) = (k % n_analysis, k / n_analysis);
                    (wa[i] * wa[j], [xa[i], xa[j]])
                })
                .collect()
        };
        let mut l2 = vec![0.0; nvars];
        let mut linf = vec![0.0f64; nvars];
        for e in 0..self.n_elements() {
            let g = &self.cache.geometry[e];
            let values = apply_tensor(&mats[..ndims], ndims, nvars, u.element(e));
            for (k, (w, xi)) in points.iter().enumerate() {
                let x = [g.center[0] + 0.5 * g.edge * xi[0], g.center[1] + 0.5 * g.edge * xi[1]];
                let exact = reference.evaluate(&x[..ndims], t);
                for v in 0..nvars {
                    let d = values[k * nvars + v] - exact[v];
                    l2[v] += w * g.jacobian * d * d;
                    linf[v] = linf[v].max(d.abs());
                }
            }
        }
        let measure = self.mesh.domain_measure();
        Ok(ErrorNorms {
            l2: l2.into_iter().map(|x| (x / measure).sqrt()).collect(),
            linf,
        })
    }

    pub fn analyze(&self, u: &StateArray, t: f64) -> Result<AnalysisReport> {
        let errors = if self.initial_condition.is_exact_solution() {
            Some(self.compute_errors(u, t, &self.initial_condition)?)
        } else {
            None
        };
        Ok(AnalysisReport {
            t,
            errors,
            totals: self.conserved_totals(u)?,
            entropy: self.total_entropy(u)?,
            kinetic_energy: self.total_kinetic_energy(u)?,
        })
    }

    /// `dt = cfl · min_e Δx_e / (Σ_axes λ_e,axis · (2N + 1))`.
    pub fn compute_stable_dt(&self, u: &StateArray, cfl: f64) -> Result<f64> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0,1], got {cfl}")));
        }
        self.check_shape(u.len())?;
        let ndims = self.ndims();
        let scale = (2 * self.solver.polydeg() + 1) as f64;
        let per_element = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let mut sum = 0.0;
                for axis in 0..ndims {
                    let mut lambda = 0.0f64;
                    for node in 0..self.nodes_per_element() {
                        let s = u.node(e, node);
                        let speed = self
                            .equations
                            .max_wave_speed(&s, &s, axis)
                            .map_err(|err| relocate(err.at(e, node), e))?;
                        if speed.is_nan() {
                            return Err(Error::Divergence {
                                step: 0,
                                time: f64::NAN,
                                detail: format!("NaN wave speed in element {e}"),
                            });
                        }
                        lambda = lambda.max(speed);
                    }
                    sum += lambda;
                }
                Ok((sum, self.cache.geometry[e].edge))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut dt = f64::INFINITY;
        let mut dx_min = f64::INFINITY;
        for (sum, edge) in per_element {
            dx_min = dx_min.min(edge);
            if sum > 0.0 {
                dt = dt.min(edge / (sum * scale));
            }
        }
        Ok(if dt.is_finite() { cfl * dt } else { cfl * dx_min })
    }

    /// Refines the listed leaf cells, then coarsens the listed parents, and
    /// transfers `u` to the new mesh. On error nothing changes.
    pub fn adapt(&mut self, u: &StateArray, refine: &[usize], coarsen: &[usize]) -> Result<(StateArray, AdaptReport)> {
        self.check_shape(u.len())?;
        let ndims = self.ndims();
        let nvars = self.nvars();
        let mut mesh = self.mesh.clone();
        let before = mesh.n_elements();
        // Coarsen requests are cell ids of the current mesh; remember them by key
        // since refinement appends cells but keeps ids.
        let refined = if refine.is_empty() { Vec::new() } else { mesh.refine_cells(refine)? };
        let report = mesh.coarsen_cells(coarsen);

        let old: HashMap<(usize, [u64; 2]), &[f64]> = self
            .mesh
            .leaves()
            .iter()
            .enumerate()
            .map(|(e, &id)| {
                let c = &self.mesh.cells()[id];
                ((c.level, c.index), u.element(e))
            })
            .collect();
        let basis = &self.solver.basis;
        let mut data = Vec::with_capacity(mesh.n_elements() * u.element_len());
        for &id in mesh.leaves() {
            let c = &mesh.cells()[id];
            data.extend(transfer_key(basis, ndims, nvars, &old, c.level, c.index)?);
        }
        let cache = Self::build_cache(&mesh, &self.solver)?;
        let after = mesh.n_elements();
        self.mesh = mesh;
        self.cache = cache;
        let new_u = StateArray::from_vec(nvars, self.nodes_per_element(), after, data)?;
        Ok((
            new_u,
            AdaptReport {
                refined: refined.len(),
                coarsened: report.removed.len() >> ndims,
                skipped_coarsen: report.skipped.len(),
                elements_before: before,
                elements_after: after,
            },
        ))
    }
}

/// Element data for the cell `(level, index)` from the old leaves, which either
/// contain it (interpolate down) or tile it (project up).
fn transfer_key(
    basis: &crate::dg::LglBasis,
    ndims: usize,
    nvars: usize,
    old: &HashMap<(usize, [u64; 2]), &[f64]>,
    level: usize,
    index: [u64; 2],
) -> Result<Vec<f64>> {
    if let Some(d) = old.get(&(level, index)) {
        return Ok(d.to_vec());
    }
    for anc_level in (0..level).rev() {
        let shift = level - anc_level;
        let anc = [index[0] >> shift, index[1] >> shift];
        if let Some(d) = old.get(&(anc_level, anc)) {
            let mut cur = d.to_vec();
            for l in anc_level..level {
                let bit = level - l - 1;
                let child = (0..ndims).map(|a| (((index[a] >> bit) & 1) as usize) << a).sum();
                cur = interpolate_to_child(basis, ndims, nvars, &cur, child);
            }
            return Ok(cur);
        }
    }
    if level >= crate::mesh::MAX_LEVEL {
        return Err(Error::Invariant(format!("no source data for cell at level {level}")));
    }
    let children = (0..1usize << ndims)
        .map(|k| {
            let mut idx = [0u64; 2];
            for a in 0..ndims {
                idx[a] = 2 * index[a] + ((k >> a) & 1) as u64;
            }
            transfer_key(basis, ndims, nvars, old, level + 1, idx)
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = children.iter().map(|c| c.as_slice()).collect();
    Ok(coarsen_to_parent(basis, ndims, nvars, &refs))
}
