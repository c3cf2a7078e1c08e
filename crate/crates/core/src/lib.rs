//! Coarse-grained kinetics of laser-cooled trapped bosons.
//!
//! Atoms occupy levels of an isotropic harmonic trap. Each cooling cycle is a
//! fixed sequence of Raman absorption pulses, each followed by a complete
//! spontaneous repump whose branching ratios carry Bose enhancement. The crate
//! builds the rate matrices, runs Monte Carlo trajectories and exact
//! propagation over small configuration spaces, and analyses the results.

pub mod analysis;
pub mod basis;
pub mod dynamics;
pub mod error;
pub mod matrix_elements;
pub mod parallel;
pub mod params;
pub mod schedule;

pub use basis::{Basis, Configuration, ThermalDistribution, TrapLevel};
pub use error::{Error, Result};
pub use matrix_elements::{EmissionPattern, EmissionQuadrature, PulseSpec, RateKind, RateMatrix};
pub use params::SimParams;
pub use schedule::{Figure, Schedule};
