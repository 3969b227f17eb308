//! Pseudo-spectral solver for the critical surface quasi-geostrophic
//! equation on the half-plane with a homogeneous Dirichlet condition.

pub mod calculus;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod nonlinear;
pub mod presets;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
