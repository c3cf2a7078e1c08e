//! Dark states, the stationary condensation criterion, hysteresis and
//! photon statistics.

pub mod criterion;
pub mod dark;
pub mod hysteresis;
pub mod photon;
pub mod timing;

pub use criterion::{condensation_criterion, CriterionReport, Verdict};
pub use dark::{dark_states_of, depletion_profile, find_dark_states, DarkState, DepletionProfile};
pub use hysteresis::{hysteresis_extract, Branch, HysteresisReport};
pub use photon::{fano_factor, FanoEstimate, MIN_WINDOWS};
pub use timing::{cycles_to_seconds, CycleTiming};
