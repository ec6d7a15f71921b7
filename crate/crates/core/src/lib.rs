//! Spectral laboratory for the renormed-norm dissipativity certificate of
//! the 3D incompressible Navier–Stokes equations on the periodic torus.

pub mod certificate;
pub mod config;
pub mod error;
pub mod evolution;
mod fft;
pub mod field;
pub mod grid;
pub mod nonlinear;
pub mod operators;
pub mod renorm;
pub mod seeds;
pub mod snapshot;
pub mod workflow;

pub use error::{LabError, Result};
pub use field::{leray_project, FourierField, Mode};
pub use grid::Grid;
pub use renorm::{renormed_inner, renormed_norm, RenormContext};
