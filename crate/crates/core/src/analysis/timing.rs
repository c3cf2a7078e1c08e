use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trap periods per cycle in the default calibration (1000 cycles = 1 s at
/// a 10 kHz trap).
pub const DEFAULT_PERIODS_PER_CYCLE: f64 = 10.0;

/// Default repump-to-absorption duration ratio τ_sp/τ_abs.
pub const DEFAULT_SP_RATIO: f64 = 3.0;

/// Wall-clock duration of one cooling cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CycleTiming {
    /// A fixed number of trap periods 2π/ω per cycle.
    Calibrated { periods_per_cycle: f64 },
    /// n_pulses·(τ_abs + τ_sp), with τ_abs = (ωτ_abs)/ω and
    /// τ_sp = sp_ratio·τ_abs.
    Pulses {
        n_pulses: usize,
        omega_tau_abs: f64,
        sp_ratio: f64,
    },
}

impl Default for CycleTiming {
    fn default() -> Self {
        CycleTiming::Calibrated {
            periods_per_cycle: DEFAULT_PERIODS_PER_CYCLE,
        }
    }
}

impl CycleTiming {
    /// Cycle duration for a trap of frequency `trap_hz` = ω/2π.
    pub fn cycle_seconds(&self, trap_hz: f64) -> Result<f64> {
        if !(trap_hz > 0.0 && trap_hz.is_finite()) {
            return Err(Error::invalid(format!("trap frequency must be > 0 Hz, got {trap_hz}")));
        }
        let omega = 2.0 * PI * trap_hz;
        match *self {
            CycleTiming::Calibrated { periods_per_cycle } => {
                if !(periods_per_cycle > 0.0) {
                    return Err(Error::invalid("periods_per_cycle must be > 0"));
                }
                Ok(periods_per_cycle / trap_hz)
            }
            CycleTiming::Pulses {
                n_pulses,
                omega_tau_abs,
                sp_ratio,
            } => {
                if n_pulses == 0 || !(omega_tau_abs > 0.0) || !(sp_ratio >= 0.0) {
                    return Err(Error::invalid("pulse timing needs n_pulses ≥ 1, ωτ > 0, ratio ≥ 0"));
                }
                Ok(n_pulses as f64 * omega_tau_abs / omega * (1.0 + sp_ratio))
            }
        }
    }

    pub fn cycles_to_seconds(&self, cycles: f64, trap_hz: f64) -> Result<f64> {
        Ok(cycles * self.cycle_seconds(trap_hz)?)
    }
}

/// Seconds for `cycles` cycles with the default calibration.
pub fn cycles_to_seconds(cycles: f64, trap_hz: f64) -> Result<f64> {
    CycleTiming::default().cycles_to_seconds(cycles, trap_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_calibration() {
        assert!((cycles_to_seconds(1000.0, 1e4).unwrap() - 1.0).abs() < 1e-12);
        assert!((cycles_to_seconds(100.0, 1e4).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(cycles_to_seconds(0.0, 1e4).unwrap(), 0.0);
        assert!(cycles_to_seconds(1.0, 0.0).is_err());
    }

    #[test]
    fn pulse_timing() {
        let t = CycleTiming::Pulses {
            n_pulses: 8,
            omega_tau_abs: 8.0,
            sp_ratio: DEFAULT_SP_RATIO,
        };
        let expect = 8.0 * 8.0 * 4.0 / (2.0 * PI * 1e4);
        assert!((t.cycle_seconds(1e4).unwrap() - expect).abs() < 1e-15);
    }
}
