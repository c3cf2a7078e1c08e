//! Franck-Condon amplitudes and the absorption / emission rate matrices.

pub mod absorption;
pub mod cache;
pub mod franck_condon;
pub mod quadrature;
pub mod rates;
pub mod spontaneous;

pub use absorption::{build_absorption_rates, pulse_spectrum_sq, AbsorptionBuilder, PulseSpec, REL_CUTOFF};
pub use cache::{cache_load, cache_store};
pub use franck_condon::{franck_condon_1d, franck_condon_reduced, FcTable};
pub use quadrature::{EmissionPattern, EmissionQuadrature};
pub use rates::{RateKind, RateMatrix};
pub use spontaneous::{build_spontaneous_rates, leaky_columns};
