//! Finite-temperature generating function of the one-dimensional delta Bose gas.

pub mod cli;
pub mod correlators;
pub mod densityfn;
pub mod error;
pub mod format;
pub mod fredholm;
pub mod genfun;
pub mod grids;
pub mod identities;
pub mod kernels;
pub mod multilin;
pub mod residue;
pub mod thermo;

pub use error::{Error, Result};
