//! Stabilized P1-nonconforming immersed finite elements for planar linear
//! elasticity with a material interface.
//!
//! The mesh is a uniform right-triangle triangulation that does not follow the
//! interface. Elements crossed by the interface get "broken" Crouzeix-Raviart
//! shape functions: two linear pieces glued continuously along the chord of the
//! interface, with continuous traction across it. Coercivity of the
//! nonconforming form is restored by an edge-jump penalty `(tau/h) [u]·[v]`.
//!
//! The pipeline is
//! [`mesh::build_uniform_mesh`] → [`interface::classify_mesh`] →
//! [`assembly::assemble`] → [`assembly::apply_dirichlet`] →
//! [`solver::solve_cg`] → [`postproc::error_norms`].

pub mod assembly;
pub mod elements;
pub mod error;
pub mod geometry;
pub mod interface;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod pipeline;
pub mod postproc;
pub mod solver;

pub use error::{Error, Result};
