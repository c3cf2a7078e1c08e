//! Choice of the pulse area Ω₀τ_abs from a target excitation probability.

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::matrix_elements::{AbsorptionBuilder, PulseSpec, RateMatrix};
use crate::params::SimParams;
use crate::schedule::Schedule;

/// Largest excitation probability per pulse aimed for at the start.
pub const AUTO_TARGET_P: f64 = 0.5;

/// Calibrated areas are capped here to stay inside the weak-excitation regime.
pub const MAX_AUTO_AREA: f64 = 0.95;

/// Per-pulse areas such that each pulse of cycle 0, evaluated on the mean
/// occupations `mean_occ`, excites with probability `target_p`.
///
/// Absorption rates scale with the area squared, so one build per pulse at
/// its current area suffices. Areas are capped at [`MAX_AUTO_AREA`]; a pulse
/// that is dark on `mean_occ` keeps its current area.
pub fn calibrate_pulse_areas(
    basis: &Basis,
    schedule: &Schedule,
    params: &SimParams,
    mean_occ: &[f64],
    target_p: f64,
) -> Result<Vec<f64>> {
    calibrate_pulse_areas_with(basis, schedule, params, mean_occ, target_p, |b, pulse| b.build(pulse))
}

/// As [`calibrate_pulse_areas`], obtaining matrices from `source`.
pub fn calibrate_pulse_areas_with<'a, F>(
    basis: &'a Basis,
    schedule: &Schedule,
    params: &SimParams,
    mean_occ: &[f64],
    target_p: f64,
    mut source: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&AbsorptionBuilder<'a>, &PulseSpec) -> Result<RateMatrix>,
{
    if !(target_p > 0.0 && target_p <= 1.0) {
        return Err(Error::invalid(format!(
            "target excitation probability must lie in (0, 1], got {target_p}"
        )));
    }
    if mean_occ.len() != basis.len() {
        return Err(Error::invalid("mean occupations do not match the basis"));
    }
    let builder = AbsorptionBuilder::new(basis, params)?;
    schedule
        .resolve_cycle(0)?
        .iter()
        .map(|pulse| {
            let p = excitation_on_mean(&source(&builder, pulse)?, mean_occ);
            let a0 = pulse.omega0_tau_abs;
            Ok(if p > 0.0 {
                (a0 * (target_p / p).sqrt()).min(MAX_AUTO_AREA)
            } else {
                a0
            })
        })
        .collect()
}

/// 2·Σ_m Γ_m·⟨n_m⟩.
pub fn excitation_on_mean(m: &RateMatrix, mean_occ: &[f64]) -> f64 {
    2.0 * (0..m.size()).map(|id| m.column_sum(id) * mean_occ[id]).sum::<f64>()
}
