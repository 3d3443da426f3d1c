//! Single-photon scattering off a qubit in a waveguide, with or without a
//! mirror, and the open-system description of the qubit that results.
//!
//! The crate computes the qubit's exact dynamical map from two scattering
//! processes (photon on a ground-state qubit, photon on an excited qubit),
//! extracts the time-local master-equation rates, and evaluates
//! non-Markovianity measures.
//!
//! Units: Γ sets the unit of inverse time and the speed of light is one.

pub mod closed_form;
pub mod config;
pub mod dynamical_map;
pub mod error;
pub mod field;
pub mod master_equation;
pub mod nm_measures;
pub mod one_excitation;
pub mod pipeline;
pub mod quadrature;
pub mod series;
pub mod special;
pub mod two_excitation;
pub mod wavepacket;

pub use config::{Geometry, LatticeSpec, PhysicalConfig};
pub use error::{Error, Result};
pub use series::ComplexSeries;
