//! Point-interaction Laplacians on bounded domains.
//!
//! The crate rasterizes a domain, solves the Helmholtz problems for the
//! regular part of the Dirichlet resolvent kernel, locates the principal
//! eigenvalue of the point-interaction Hamiltonian as a function of the
//! interaction position, and audits the reflection monotonicity of that
//! landscape.

pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod geometry;
pub mod helmholtz;
pub mod landscape;
pub mod linalg;
pub mod spectral;
pub mod specfun;

pub use error::{Error, Result};
