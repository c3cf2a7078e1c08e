use serde::Serialize;

use super::timing::CycleTiming;
use crate::error::{Error, Result};
use crate::matrix_elements::{RateKind, RateMatrix};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Condensing,
    NotCondensing {
        /// Determinate levels with Γ̃ₙ ≤ 0.
        violating: Vec<usize>,
        /// Levels whose Γ̃ₙ contains a zero-over-zero ratio.
        indeterminate: Vec<usize>,
    },
}

impl Verdict {
    pub fn is_condensing(&self) -> bool {
        matches!(self, Verdict::Condensing)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub target: usize,
    /// Γ̃ₙ per level; NaN for the target and for indeterminate levels.
    pub gamma_tilde: Vec<f64>,
    pub verdict: Verdict,
    /// max_n 1/Γ̃ₙ, when condensing.
    pub cooling_time_cycles: Option<f64>,
    pub cooling_time_seconds: Option<f64>,
    /// Σ_m Γ^abs_{m n₀} / 2N, per cycle.
    pub phase_diffusion_per_cycle: f64,
}

impl CriterionReport {
    /// Smallest determinate Γ̃ₙ over n ≠ n₀.
    pub fn min_gamma_tilde(&self) -> Option<f64> {
        self.gamma_tilde
            .iter()
            .enumerate()
            .filter(|(n, g)| *n != self.target && !g.is_nan())
            .map(|(_, &g)| g)
            .reduce(f64::min)
    }
}

/// Stationary condensation criterion for target level `target`.
///
/// Γ̃ₙ = Σ_m (Γ^abs_{mn} − Γ^abs_{mn₀}·Γ^sp_{nm}/Γ^sp_{n₀m}) with Γ^abs summed
/// over `cycle`; m runs over excited levels, Γ^sp is (ground, excited).
/// Terms with Γ^abs_{mn₀} = 0 contribute Γ^abs_{mn} alone.
pub fn condensation_criterion(
    cycle: &[&RateMatrix],
    gamma_sp: &RateMatrix,
    target: usize,
    atoms: u32,
    timing: &CycleTiming,
    trap_hz: f64,
) -> Result<CriterionReport> {
    if cycle.is_empty() {
        return Err(Error::invalid("pulse list is empty"));
    }
    if gamma_sp.kind() != RateKind::Spontaneous {
        return Err(Error::invalid("criterion needs the spontaneous matrix"));
    }
    let size = gamma_sp.size();
    if cycle
        .iter()
        .any(|m| m.size() != size || m.kind() != RateKind::Absorption)
    {
        return Err(Error::invalid(
            "absorption matrices do not match the spontaneous matrix",
        ));
    }
    if target >= size {
        return Err(Error::invalid(format!("target level id {target} outside basis")));
    }
    if atoms == 0 {
        return Err(Error::invalid("atom number must be ≥ 1"));
    }
    // Depletion term Σ_m Γ^abs_{mn}.
    let mut g: Vec<f64> = (0..size).map(|n| cycle.iter().map(|m| m.column_sum(n)).sum()).collect();
    // Cycle-summed excitation of the target: m → Γ^abs_{m n₀}.
    let mut from_target: Vec<(usize, f64)> = Vec::new();
    for m in cycle {
        let (rows, vals) = m.column(target);
        for (&r, &v) in rows.iter().zip(vals) {
            match from_target.iter_mut().find(|e| e.0 == r as usize) {
                Some(e) => e.1 += v,
                None => from_target.push((r as usize, v)),
            }
        }
    }
    from_target.sort_unstable_by_key(|e| e.0);
    let mut indeterminate = vec![false; size];
    for &(m, a) in &from_target {
        if a == 0.0 {
            continue;
        }
        let denom = gamma_sp.get(target, m);
        if denom == 0.0 {
            for (n, flag) in indeterminate.iter_mut().enumerate() {
                *flag |= n != target;
            }
            continue;
        }
        let (rows, vals) = gamma_sp.column(m);
        for (&n, &sp) in rows.iter().zip(vals) {
            g[n as usize] -= a * sp / denom;
        }
    }
    g[target] = f64::NAN;
    let mut violating = Vec::new();
    let mut indet = Vec::new();
    for n in 0..size {
        if n == target {
            continue;
        }
        if indeterminate[n] {
            g[n] = f64::NAN;
            indet.push(n);
        } else if !(g[n] > 0.0) {
            violating.push(n);
        }
    }
    let verdict = if violating.is_empty() && indet.is_empty() {
        Verdict::Condensing
    } else {
        Verdict::NotCondensing {
            violating,
            indeterminate: indet,
        }
    };
    let cooling_time_cycles = verdict.is_condensing().then(|| {
        g.iter()
            .enumerate()
            .filter(|(n, _)| *n != target)
            .map(|(_, &x)| 1.0 / x)
            .fold(0.0, f64::max)
    });
    let cooling_time_seconds = match cooling_time_cycles {
        Some(c) => Some(timing.cycles_to_seconds(c, trap_hz)?),
        None => None,
    };
    let total_from_target: f64 = from_target.iter().map(|e| e.1).sum();
    Ok(CriterionReport {
        target,
        gamma_tilde: g,
        verdict,
        cooling_time_cycles,
        cooling_time_seconds,
        phase_diffusion_per_cycle: total_from_target / (2.0 * atoms as f64),
    })
}
