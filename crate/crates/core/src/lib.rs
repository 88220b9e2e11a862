//! Nodal discontinuous Galerkin time-domain solver for doubly periodic structures
//! under oblique planewave incidence.
//!
//! Fields are carried in the transformed (P, S) variables, which remove the transverse
//! phase of the incident wave so that periodic boundaries become delay-free. The crate
//! covers the reference element, periodic unit-cell meshes, the per-element operators,
//! the upwind semi-discrete system with LSRK4 time stepping, spectral post-processing
//! and an independent transfer-matrix oracle for layered media.

pub mod error;
pub mod experiment;
pub mod jacobi;
pub mod mesh;
pub mod operators;
pub mod oracle;
pub mod postproc;
pub mod quadrature;
pub mod reference;
pub mod solver;

pub use error::{Error, Result};
