//! Adaptive discontinuous Galerkin spectral element solver for hyperbolic
//! conservation laws on 1D/2D Cartesian tree meshes.
//!
//! The pieces fit together as in a method-of-lines code: an [`equations::EquationSet`]
//! and a [`mesh::TreeMesh`] are combined with a [`dg::DgSolver`] into a
//! [`semi::Semidiscretization`], whose right-hand side is advanced in time by
//! [`timeint::integrate`] while callbacks handle step size control, limiting,
//! mesh adaptation, analysis and output.

pub mod dg;
pub mod equations;
pub mod error;
pub mod mesh;
pub mod semi;
pub mod timeint;

pub use error::{Error, Location, Result};
