//! Entropy-stable discontinuous Galerkin spectral element solver for the
//! incompressible Navier-Stokes/Cahn-Hilliard system with artificial
//! compressibility.

pub mod basis;
pub mod cases;
pub mod config;
pub mod dg;
pub mod diagnostics;
pub mod error;
pub mod fluxes;
pub mod mesh;
pub mod output;
pub mod physics;
pub mod run;
pub mod time;
pub mod verify;

pub use error::{Error, Result};
