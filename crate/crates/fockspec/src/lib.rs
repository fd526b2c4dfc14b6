//! Spectral numerics for a 2×2 block operator matrix acting on the one- and
//! two-boson sectors of a lattice Fock space over the three-torus.
//!
//! The crate computes fiber band edges and determinants, the essential
//! spectrum and its critical couplings, Birman–Schwinger eigenvalue counts
//! (checked against a direct finite model), and the logarithmic count
//! asymptotics at critical coupling.

pub mod birman_schwinger;
pub mod efimov;
pub mod error;
pub mod essential;
pub mod friedrichs;
pub mod linalg;
pub mod spectral;
pub mod torus;

pub use error::{Error, Result};
