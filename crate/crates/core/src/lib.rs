//! Gauge-invariant multimode cavity QED.
//!
//! A two-level atom (reduced from a grid-discretized anharmonic atom) couples
//! to the quantized modes of a 1D cavity. The crate builds and compares dense
//! Rabi Hamiltonians in the Coulomb and dipole gauges, maps the star-coupled
//! field onto a nearest-neighbour chain, and evolves the chain as a matrix
//! product state.
//!
//! Natural units throughout: `ħ = c = ε0 = 1`, atomic gap `ω_a = 1`, mode
//! volume equal to the cavity length.

pub mod atom;
pub mod chainmap;
pub mod error;
pub mod fock;
pub mod hamiltonians;
pub mod linalg;
pub mod modes;
pub mod mps;
pub mod observables;
pub mod pauli;
pub mod scenarios;

pub use error::{CqedError, Result};
