//! Physical parameters shared by all rate-matrix builders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default dimensionless pulse width ω·τ_abs.
///
/// At 8 the nearest off-resonant shell is suppressed by e^{-32}, which falls
/// under the sparsity cutoff, so only resonant transitions survive.
pub const DEFAULT_OMEGA_TAU_ABS: f64 = 8.0;

/// Placeholder pulse area used before calibration.
pub const DEFAULT_OMEGA0_TAU_ABS: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Lamb-Dicke parameter η = sqrt(E_R / ħω).
    pub eta: f64,
    /// Spontaneous Raman rate in units of ω.
    pub gamma: f64,
    pub omega_tau_abs: f64,
    pub omega0_tau_abs: f64,
    /// k_a / k_L, scaling the recoil of spontaneous emission.
    pub eta_sp_ratio: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            eta: 2.0,
            gamma: 0.01,
            omega_tau_abs: DEFAULT_OMEGA_TAU_ABS,
            omega0_tau_abs: DEFAULT_OMEGA0_TAU_ABS,
            eta_sp_ratio: 1.0,
        }
    }
}

impl SimParams {
    pub fn with_eta(eta: f64) -> Self {
        SimParams {
            eta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.eta_sp_ratio >= 0.0) {
            return Err(Error::invalid(format!(
                "eta_sp_ratio must be ≥ 0, got {}",
                self.eta_sp_ratio
            )));
        }
        validate_pulse_shape(self.omega0_tau_abs, self.omega_tau_abs)
    }

    /// Recoil parameter of spontaneous emission.
    pub fn eta_sp(&self) -> f64 {
        self.eta * self.eta_sp_ratio
    }
}

/// Pulse width must resolve single trap quanta; pulse area must keep the
/// expansion in the weak-excitation regime.
pub fn validate_pulse_shape(omega0_tau_abs: f64, omega_tau_abs: f64) -> Result<()> {
    if !(omega_tau_abs > 1.0) {
        return Err(Error::invalid(format!(
            "omega_tau_abs must be > 1, got {omega_tau_abs}"
        )));
    }
    if !(omega0_tau_abs > 0.0) {
        return Err(Error::invalid(format!(
            "omega0_tau_abs must be > 0, got {omega0_tau_abs}"
        )));
    }
    if omega0_tau_abs >= 1.0 {
        return Err(Error::PerturbativeBound {
            p: omega0_tau_abs,
            context: "omega0_tau_abs must be < 1".into(),
        });
    }
    Ok(())
}
