//! Numerics for the lowest-Landau-level equation: theta functions, lattice
//! solutions, the Fock-space coefficient flow and the linearization around
//! the rectangular and hexagonal lattices.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod lattice;
pub mod linstab;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
