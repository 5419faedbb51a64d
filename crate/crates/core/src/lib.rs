//! Local hidden state models for generalized measurements on Bell-diagonal
//! two-qubit states.
//!
//! - [`bloch`]: four-vectors, correlation matrices, rank-1 POVMs.
//! - [`sphere_quad`]: product quadrature and Monte-Carlo on the unit sphere.
//! - [`critical_radius`]: `N_T`, `R_T` and their closed forms.
//! - [`lhs_model`]: PVM and POVM response functions and their verification.
//! - [`povm_sampling`]: random and canonical POVMs.
//! - [`classify`]: separability and unsteerability certificates, level surfaces.
//! - [`cli`]: command-line front end.

pub mod bloch;
pub mod classify;
pub mod cli;
pub mod critical_radius;
pub mod error;
pub mod lhs_model;
pub mod povm_sampling;
pub mod sphere_quad;

pub use bloch::{BellDiagonalState, CorrelationMatrix, Effect, FourVector, Povm};
pub use error::{Error, Result};
pub use sphere_quad::SphereGrid;
