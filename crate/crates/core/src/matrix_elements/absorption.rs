//! Stimulated Raman absorption rates for three axis-aligned beam pairs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::cache::Fingerprint;
use super::franck_condon::FcTable;
use super::rates::{RateKind, RateMatrix};
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::params::{validate_pulse_shape, SimParams, DEFAULT_OMEGA0_TAU_ABS, DEFAULT_OMEGA_TAU_ABS};

/// Entries below this fraction of the matrix maximum are dropped.
pub const REL_CUTOFF: f64 = 1e-12;

/// One Raman absorption pulse (followed by a complete repump).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Detuning in units of the trap frequency, δ = s·ω.
    pub s: i32,
    /// Relative beam amplitudes A_j, one per trap axis.
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_area")]
    pub omega0_tau_abs: f64,
    #[serde(default = "default_width")]
    pub omega_tau_abs: f64,
}

fn default_area() -> f64 {
    DEFAULT_OMEGA0_TAU_ABS
}

fn default_width() -> f64 {
    DEFAULT_OMEGA_TAU_ABS
}

impl PulseSpec {
    pub fn new(s: i32, amplitudes: Vec<f64>) -> Self {
        PulseSpec {
            s,
            amplitudes,
            omega0_tau_abs: DEFAULT_OMEGA0_TAU_ABS,
            omega_tau_abs: DEFAULT_OMEGA_TAU_ABS,
        }
    }

    /// All beams at unit amplitude.
    pub fn uniform(s: i32, dim: usize) -> Self {
        Self::new(s, vec![1.0; dim])
    }

    pub fn with_shape(mut self, omega0_tau_abs: f64, omega_tau_abs: f64) -> Self {
        self.omega0_tau_abs = omega0_tau_abs;
        self.omega_tau_abs = omega_tau_abs;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.amplitudes.len() != dim {
            return Err(Error::invalid(format!(
                "pulse s={} has {} amplitudes for a {dim}D basis",
                self.s,
                self.amplitudes.len()
            )));
        }
        if self.amplitudes.iter().all(|a| *a == 0.0) || self.amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid(format!(
                "pulse s={} needs at least one nonzero finite amplitude",
                self.s
            )));
        }
        validate_pulse_shape(self.omega0_tau_abs, self.omega_tau_abs)
    }

    /// Dimensionless per-pulse prefactor (Ω₀τ_abs)²·π/8.
    pub fn prefactor(&self) -> f64 {
        self.omega0_tau_abs * self.omega0_tau_abs * PI / 8.0
    }

    pub(crate) fn fingerprint_into(&self, fp: &mut Fingerprint) {
        fp.i64(self.s as i64);
        fp.u64(self.amplitudes.len() as u64);
        for a in &self.amplitudes {
            fp.f64(*a);
        }
        fp.f64(self.omega0_tau_abs);
        fp.f64(self.omega_tau_abs);
    }
}

/// |f̃(Δ)|² of a Gaussian envelope exp(−t²/τ²), normalized to 1 at Δ = 0.
///
/// `delta_mismatch` is in units of ω.
pub fn pulse_spectrum_sq(delta_mismatch: f64, omega_tau_abs: f64) -> f64 {
    let x = delta_mismatch * omega_tau_abs;
    (-0.5 * x * x).exp()
}

/// Builds absorption matrices for one basis and η, reusing the FC table.
#[derive(Clone, Debug)]
pub struct AbsorptionBuilder<'a> {
    basis: &'a Basis,
    eta: f64,
    fc: FcTable,
}

impl<'a> AbsorptionBuilder<'a> {
    pub fn new(basis: &'a Basis, params: &SimParams) -> Result<Self> {
        params.validate()?;
        Ok(AbsorptionBuilder {
            basis,
            eta: params.eta,
            fc: FcTable::new(params.eta, basis.max_shell()),
        })
    }

    pub fn fingerprint(&self, pulse: &PulseSpec) -> u64 {
        let mut fp = Fingerprint::new(RateKind::Absorption);
        fp.u64(self.basis.dim() as u64);
        fp.u64(self.basis.max_shell() as u64);
        fp.f64(self.eta);
        pulse.fingerprint_into(&mut fp);
        fp.finish()
    }

    /// Γ^abs for `pulse`: column m holds (l, Γ_lm).
    pub fn build(&self, pulse: &PulseSpec) -> Result<RateMatrix> {
        let basis = self.basis;
        let dim = basis.dim();
        pulse.validate(dim)?;
        let c = pulse.prefactor();
        let wt = pulse.omega_tau_abs;
        // Spectral window: mismatches with |k|·ωτ beyond ~8.6 are < 1e-16.
        let window = ((2.0 * 16.0 * 10f64.ln()).sqrt() / wt).ceil() as i64 + 1;
        let max_shell = basis.max_shell() as i64;
        let mut col_ptr = Vec::with_capacity(basis.len() + 1);
        let mut rows: Vec<u32> = Vec::with_capacity(basis.len() * (1 + dim));
        let mut values: Vec<f64> = Vec::with_capacity(basis.len() * (1 + dim));
        let mut scratch: Vec<(u32, f64)> = Vec::with_capacity(1 + dim * (2 * window as usize + 1));
        let diag_spec = pulse_spectrum_sq(pulse.s as f64, wt);
        col_ptr.push(0);
        for m_id in 0..basis.len() {
            let m = basis.level(m_id);
            scratch.clear();
            // l = m: all beams contribute coherently.
            let diag_amp: f64 = (0..dim)
                .map(|j| pulse.amplitudes[j] * self.fc.reduced(m.axis(j), m.axis(j)))
                .sum();
            let diag = c * diag_amp * diag_amp * diag_spec;
            if diag > 0.0 {
                scratch.push((m_id as u32, diag));
            }
            let m_shell = m.shell() as i64;
            for j in 0..dim {
                let a = pulse.amplitudes[j];
                if a == 0.0 {
                    continue;
                }
                let mj = m.axis(j) as i64;
                for d in -window..=window {
                    let lj = mj + pulse.s as i64 + d;
                    if lj < 0 || lj == mj || m_shell - mj + lj > max_shell {
                        continue;
                    }
                    let spec = pulse_spectrum_sq((pulse.s as i64 - (lj - mj)) as f64, wt);
                    let v = c * a * a * self.fc.prob(lj as u16, mj as u16) * spec;
                    if v > 0.0 {
                        let l_id = basis.id(&m.with_axis(j, lj as u16)).expect("shell bound checked");
                        scratch.push((l_id as u32, v));
                    }
                }
            }
            scratch.sort_unstable_by_key(|e| e.0);
            for &(r, v) in &scratch {
                rows.push(r);
                values.push(v);
            }
            col_ptr.push(rows.len());
        }
        RateMatrix::from_flat(
            RateKind::Absorption,
            basis.len(),
            self.fingerprint(pulse),
            col_ptr,
            rows,
            values,
            REL_CUTOFF,
        )
    }
}

/// Convenience wrapper building a single absorption matrix.
pub fn build_absorption_rates(pulse: &PulseSpec, basis: &Basis, params: &SimParams) -> Result<RateMatrix> {
    AbsorptionBuilder::new(basis, params)?.build(pulse)
}
