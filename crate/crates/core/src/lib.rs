//! Numerical laboratory for the thermoelastic Timoshenko beam with Gurtin–Pipkin heat
//! conduction on both thermal channels, in the history framework of Dafermos.
//!
//! The crate discretizes the beam by Galerkin finite elements (or a sine/cosine basis),
//! replaces the thermal memory by exact exponential-mode history variables, and exposes
//! tools to check the resulting semi-discrete system: its energy identity, its spectrum
//! and spectral abscissa, resolvent norms along the imaginary axis, energy-exact time
//! stepping, and the Cattaneo / Fourier / Coleman–Gurtin special and limit cases.
//!
//! ```no_run
//! use thermobeam::assembly::{assemble, ModelConfig};
//! use thermobeam::spectra::spectral_abscissa;
//!
//! let config = ModelConfig::default();
//! let system = assemble(&config).unwrap();
//! println!("abscissa = {}", spectral_abscissa(&system).unwrap());
//! ```

pub mod assembly;
pub mod dynamics;
pub mod error;
pub mod kernels;
mod linalg;
pub mod quadrature;
pub mod spaces;
pub mod spectra;
pub mod studies;

pub use error::{Error, Result};
pub use linalg::Matrix;
