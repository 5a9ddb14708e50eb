//! Exact Hermite and cumulant algebra, finite-dimensional Wiener chaos,
//! spectral Gaussian fields on the torus and Feynman-diagram valuation
//! for the perturbative Φ⁴ expansion.

pub mod budget;
pub mod chaos;
pub mod cumulants;
pub mod error;
pub mod feynman;
pub mod lattice;
pub mod mc;
pub mod mpoly;
pub mod pairings;
pub mod phi4;
pub mod polyalg;
pub mod rational;
pub mod torusfield;
pub mod verify;

pub use error::{Error, Result};
pub use rational::Rational;
