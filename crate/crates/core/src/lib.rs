//! Equilibria, friction phases and fluctuation spectra of an ion chain coupled
//! to a driven optical cavity.

pub mod equilibrium;
pub mod error;
pub mod params;
pub mod potential;

pub use error::{Error, Result};
pub mod fluctuations;
pub mod phases;
pub mod cli;
