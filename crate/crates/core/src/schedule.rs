//! Named pulse types, cooling cycles and parameter ramps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_elements::PulseSpec;
use crate::params::SimParams;

/// Closest integer to η².
pub fn eta_hat_sq(eta: f64) -> i32 {
    (eta * eta).round() as i32
}

/// δ = −D·η̂²·ω (+ offset for the slightly detuned twin).
pub fn confinement_pulse(dim: usize, eta: f64, offset: i32) -> PulseSpec {
    PulseSpec::uniform(-(dim as i32) * eta_hat_sq(eta) + offset, dim)
}

/// The pair δ = −3η²ω/2 and δ = −η²ω, rounded to integer detunings.
pub fn pseudo_confinement_pulses(dim: usize, eta: f64, offset: i32) -> (PulseSpec, PulseSpec) {
    let e2 = eta * eta;
    (
        PulseSpec::uniform(-(1.5 * e2).round() as i32 + offset, dim),
        PulseSpec::uniform(-e2.round() as i32 + offset, dim),
    )
}

/// Whether both pseudo-confinement detunings are integers for this η.
pub fn pseudo_confinement_exact(eta: f64) -> bool {
    let e2 = eta * eta;
    let close = |x: f64| (x - x.round()).abs() < 1e-9;
    close(e2) && close(1.5 * e2)
}

pub fn sideband_pulse(s: i32, amplitudes: Option<Vec<f64>>, dim: usize) -> PulseSpec {
    PulseSpec::new(s, amplitudes.unwrap_or_else(|| vec![1.0; dim]))
}

/// Resonant (s = 0) pulse whose beams interfere.
pub fn interference_pulse(amplitudes: Vec<f64>) -> PulseSpec {
    PulseSpec::new(0, amplitudes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampField {
    Ax,
    Ay,
    Az,
    /// Pulse area Ω₀τ_abs.
    Area,
}

impl RampField {
    fn axis(self) -> Option<usize> {
        match self {
            RampField::Ax => Some(0),
            RampField::Ay => Some(1),
            RampField::Az => Some(2),
            RampField::Area => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RampField::Ax => "ax",
            RampField::Ay => "ay",
            RampField::Az => "az",
            RampField::Area => "area",
        }
    }

    fn apply(self, pulse: &mut PulseSpec, value: f64) {
        match self.axis() {
            Some(j) => pulse.amplitudes[j] = value,
            None => pulse.omega0_tau_abs = value,
        }
    }

    fn read(self, pulse: &PulseSpec) -> f64 {
        match self.axis() {
            Some(j) => pulse.amplitudes[j],
            None => pulse.omega0_tau_abs,
        }
    }
}

/// Linear change of one pulse field between two cycle indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub pulse: usize,
    pub field: RampField,
    pub from: f64,
    pub to: f64,
    pub start: usize,
    pub end: usize,
}

impl Ramp {
    /// Value at `cycle`, or `None` before the window opens. Written as
    /// (from·(len−k) + to·k)/len so a reversed ramp retraces bit-for-bit.
    pub fn value_at(&self, cycle: usize) -> Option<f64> {
        if cycle < self.start {
            return None;
        }
        let len = (self.end - self.start) as f64;
        let k = (cycle.min(self.end) - self.start) as f64;
        Some((self.from * (len - k) + self.to * k) / len)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub cycle: Vec<PulseSpec>,
    #[serde(default)]
    pub ramps: Vec<Ramp>,
    pub total_cycles: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl std::str::FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Figure::Fig1),
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            other => Err(Error::invalid(format!("unknown figure id {other:?}"))),
        }
    }
}

pub const FIG3_HOLD_CYCLES: usize = 1200;
pub const FIG3_RAMP_CYCLES: usize = 18600;
pub const FIG3_AZ_LOW: f64 = -1.94;
pub const FIG3_AZ_HIGH: f64 = -0.08;

fn cycle_from(list: &[i32], params: &SimParams) -> Vec<PulseSpec> {
    list.iter()
        .map(|&s| PulseSpec::uniform(s, 3).with_shape(params.omega0_tau_abs, params.omega_tau_abs))
        .collect()
}

/// Ground-state hysteresis schedule: hold at A_z = −1.94, ramp up to −0.08,
/// ramp back down, windows of `hold` and `ramp` cycles.
pub fn hysteresis_schedule(hold: usize, ramp: usize, params: &SimParams) -> Schedule {
    let mut cycle = cycle_from(&[-12, -6, -4, 0, -13, -7, -5, -2], params);
    cycle[3].amplitudes[2] = FIG3_AZ_LOW;
    Schedule {
        cycle,
        ramps: vec![
            Ramp {
                pulse: 3,
                field: RampField::Az,
                from: FIG3_AZ_LOW,
                to: FIG3_AZ_HIGH,
                start: hold,
                end: hold + ramp,
            },
            Ramp {
                pulse: 3,
                field: RampField::Az,
                from: FIG3_AZ_HIGH,
                to: FIG3_AZ_LOW,
                start: hold + ramp,
                end: hold + 2 * ramp,
            },
        ],
        total_cycles: hold + 2 * ramp,
    }
}

/// Pulse sequences of the three reference experiments (3D).
pub fn figure_schedule(figure: Figure, params: &SimParams) -> Schedule {
    match figure {
        Figure::Fig1 => {
            let mut cycle = cycle_from(&[-12, -6, -4, 0, -13, -7, -5, -1], params);
            cycle[3].amplitudes[2] = -2.0;
            Schedule {
                cycle,
                ramps: Vec::new(),
                total_cycles: 2000,
            }
        }
        Figure::Fig2 => Schedule {
            cycle: cycle_from(&[-12, -6, -3, 3, -13, -7, -4, -2], params),
            ramps: Vec::new(),
            total_cycles: 4000,
        },
        Figure::Fig3 => hysteresis_schedule(FIG3_HOLD_CYCLES, FIG3_RAMP_CYCLES, params),
    }
}

impl Schedule {
    pub fn new(cycle: Vec<PulseSpec>, total_cycles: usize) -> Self {
        Schedule {
            cycle,
            ramps: Vec::new(),
            total_cycles,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.cycle.is_empty() {
            return Err(Error::invalid("schedule has an empty pulse list"));
        }
        for p in &self.cycle {
            p.validate(dim)?;
        }
        for r in &self.ramps {
            if r.pulse >= self.cycle.len() {
                return Err(Error::invalid(format!("ramp references missing pulse {}", r.pulse)));
            }
            if let Some(j) = r.field.axis() {
                if j >= dim {
                    return Err(Error::invalid(format!(
                        "ramp field {} does not exist in {dim}D",
                        r.field.label()
                    )));
                }
            }
            if r.end <= r.start {
                return Err(Error::invalid(format!(
                    "ramp window [{}, {}] has zero length",
                    r.start, r.end
                )));
            }
            if r.end > self.total_cycles {
                return Err(Error::invalid(format!(
                    "ramp window [{}, {}] exceeds total_cycles {}",
                    r.start, r.end, self.total_cycles
                )));
            }
        }
        Ok(())
    }

    /// Set the pulse area of every pulse.
    pub fn with_pulse_area(mut self, omega0_tau_abs: f64) -> Self {
        for p in self.cycle.iter_mut() {
            p.omega0_tau_abs = omega0_tau_abs;
        }
        self
    }

    /// Set each pulse's area from `areas`, one per pulse.
    pub fn with_pulse_areas(mut self, areas: &[f64]) -> Result<Self> {
        if areas.len() != self.cycle.len() {
            return Err(Error::invalid(format!(
                "{} areas for {} pulses",
                areas.len(),
                self.cycle.len()
            )));
        }
        for (p, &a) in self.cycle.iter_mut().zip(areas) {
            p.omega0_tau_abs = a;
        }
        Ok(self)
    }

    pub fn with_total_cycles(mut self, total: usize) -> Self {
        self.total_cycles = total;
        self
    }

    pub fn is_ramped(&self, pulse: usize) -> bool {
        self.ramps.iter().any(|r| r.pulse == pulse)
    }

    /// Distinct (pulse, field) pairs under ramp control, in declaration order.
    pub fn ramp_channels(&self) -> Vec<(usize, RampField)> {
        let mut out: Vec<(usize, RampField)> = Vec::new();
        for r in &self.ramps {
            if !out.contains(&(r.pulse, r.field)) {
                out.push((r.pulse, r.field));
            }
        }
        out
    }

    fn channel_value(&self, pulse: usize, field: RampField, cycle: usize) -> f64 {
        // The latest-starting open window wins.
        self.ramps
            .iter()
            .filter(|r| r.pulse == pulse && r.field == field)
            .filter_map(|r| r.value_at(cycle).map(|v| (r.start, v)))
            .max_by_key(|(start, _)| *start)
            .map(|(_, v)| v)
            .unwrap_or_else(|| field.read(&self.cycle[pulse]))
    }

    /// Values of all ramp channels at `cycle`.
    pub fn ramp_values(&self, cycle: usize) -> Vec<f64> {
        self.ramp_channels()
            .into_iter()
            .map(|(p, f)| self.channel_value(p, f, cycle))
            .collect()
    }

    /// Concrete pulses of cycle `cycle_index` with ramps applied.
    pub fn resolve_cycle(&self, cycle_index: usize) -> Result<Vec<PulseSpec>> {
        if cycle_index >= self.total_cycles {
            return Err(Error::invalid(format!(
                "cycle index {cycle_index} out of range (total {})",
                self.total_cycles
            )));
        }
        let mut out = self.cycle.clone();
        for (p, f) in self.ramp_channels() {
            let v = self.channel_value(p, f, cycle_index);
            f.apply(&mut out[p], v);
        }
        Ok(out)
    }
}
