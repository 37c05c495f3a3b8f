//! Superadiabatic STIRAP simulation for a three-level ladder (qutrit).
//!
//! All rates and times are expressed in units of the anharmonicity `Δ` (with `ħ = 1`).

pub mod error;
pub mod evolve;
pub mod model;
pub mod protocols;
pub mod pulses;
pub mod quad;
pub mod robustness;
pub mod spectroscopy;
pub mod stark;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{C64, Hamiltonian, QutritParams, StateVector};
