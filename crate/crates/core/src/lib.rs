//! Pseudo-spectral solver for a diffuse-interface model of two viscous,
//! incompressible fluids with unmatched densities on the periodic box.
//!
//! The phase field follows a convective (optionally viscous) Cahn–Hilliard
//! equation with the logarithmic potential; the velocity follows a
//! variable-density Navier–Stokes system with the capillary force `μ∇φ`.
//! One coupled step advances the phase first and the velocity second.

pub mod cahn_hilliard;
pub mod coupled;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod init_reg;
pub mod momentum;
mod newton;
pub mod spectral;
pub mod thermo;

pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField, TensorField, VectorField};
pub use spectral::{SpectralWorkspace, Spectrum};
pub use thermo::{EnergyBreakdown, Mixture, Params, Potential};
