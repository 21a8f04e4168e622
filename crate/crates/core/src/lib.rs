//! Simulation of flux-threaded rhombic qubit arrays in the single-excitation
//! sector: lattice Hamiltonians, closed and Lindblad dynamics, effective
//! chain/trimer mappings, spectroscopy, adiabatic state preparation, Bloch
//! bands with Zak phases, and the tunable-coupler device layer.
//!
//! Frequencies and times are dimensionless unless a function says
//! otherwise; the usual convention is `J = 1` with times measured as `Jt`.

pub mod bands;
pub mod device;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod open_system;
pub mod protocols;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
pub use lattice::{Flux, RhombicLattice, SiteId};
pub use linalg::HermitianOperator;
pub use trace::PopulationTrace;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
