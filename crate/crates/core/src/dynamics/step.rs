//! One absorption pulse followed by a complete repump.

use rand::Rng;

use crate::basis::Configuration;
use crate::error::{Error, Result};
use crate::matrix_elements::{RateKind, RateMatrix};

/// Excitation probabilities above this raise the warning counter.
pub const WARN_EXCITATION_PROBABILITY: f64 = 0.5;

/// Absorption matrix of one pulse together with its per-level depletion
/// Γ_m = Σ_l Γ^abs_{lm}.
#[derive(Clone, Debug)]
pub struct PulseRates {
    matrix: RateMatrix,
    depletion: Vec<f64>,
}

impl PulseRates {
    pub fn new(matrix: RateMatrix) -> Result<Self> {
        if matrix.kind() != RateKind::Absorption {
            return Err(Error::invalid("pulse rates need an absorption matrix"));
        }
        let depletion = matrix.column_sums();
        Ok(PulseRates { matrix, depletion })
    }

    pub fn matrix(&self) -> &RateMatrix {
        &self.matrix
    }

    pub fn depletion(&self) -> &[f64] {
        &self.depletion
    }

    /// p = 2·Σ_m Γ_m·n_m on `config`.
    pub fn excitation_probability(&self, config: &Configuration) -> f64 {
        2.0 * config
            .support()
            .iter()
            .map(|&m| self.depletion[m as usize] * config.get(m as usize) as f64)
            .sum::<f64>()
    }
}

/// Spontaneous matrix with per-column cumulative sums for fast sampling of
/// the bare (unenhanced) part of the branching weights.
#[derive(Clone, Debug)]
pub struct EmissionTable {
    matrix: RateMatrix,
    offsets: Vec<usize>,
    cumulative: Vec<f64>,
}

impl EmissionTable {
    pub fn new(matrix: RateMatrix) -> Result<Self> {
        if matrix.kind() != RateKind::Spontaneous {
            return Err(Error::invalid("emission table needs a spontaneous matrix"));
        }
        let mut offsets = Vec::with_capacity(matrix.size() + 1);
        let mut cumulative = Vec::with_capacity(matrix.nnz());
        offsets.push(0);
        for l in 0..matrix.size() {
            let mut acc = 0.0;
            for &v in matrix.column(l).1 {
                acc += v;
                cumulative.push(acc);
            }
            offsets.push(cumulative.len());
        }
        Ok(EmissionTable {
            matrix,
            offsets,
            cumulative,
        })
    }

    pub fn matrix(&self) -> &RateMatrix {
        &self.matrix
    }

    fn column_total(&self, l: usize) -> f64 {
        let (a, b) = (self.offsets[l], self.offsets[l + 1]);
        if a == b {
            0.0
        } else {
            self.cumulative[b - 1]
        }
    }

    /// Σ_n Γ^sp_{nl}·n_n, the stimulated part of the normalization.
    fn stimulated_total(&self, l: usize, config: &Configuration) -> f64 {
        config
            .support()
            .iter()
            .map(|&n| self.matrix.get(n as usize, l) * config.get(n as usize) as f64)
            .sum()
    }

    /// Branching weights Γ^sp_{nl}·(n_n + 1) over `config`, normalized.
    pub fn branching(&self, l: usize, config: &Configuration) -> Result<Vec<(usize, f64)>> {
        let (rows, vals) = self.matrix.column(l);
        let z = self.column_total(l) + self.stimulated_total(l, config);
        if !(z > 0.0) {
            return Err(no_channel(l));
        }
        Ok(rows
            .iter()
            .zip(vals)
            .map(|(&n, &v)| (n as usize, v * (config.get(n as usize) as f64 + 1.0) / z))
            .collect())
    }

    /// Draw the emission destination from excited level `l` with
    /// `config` already holding the atom removed.
    pub fn sample_destination<R: Rng + ?Sized>(&self, l: usize, config: &Configuration, rng: &mut R) -> Result<usize> {
        let bare = self.column_total(l);
        let z = bare + self.stimulated_total(l, config);
        if !(z > 0.0) {
            return Err(no_channel(l));
        }
        let u = rng.random::<f64>() * z;
        let rows = self.matrix.column(l).0;
        if u < bare {
            let cum = &self.cumulative[self.offsets[l]..self.offsets[l + 1]];
            let k = cum.partition_point(|&c| c <= u).min(rows.len() - 1);
            return Ok(rows[k] as usize);
        }
        let mut t = u - bare;
        let mut last = None;
        for &n in config.support() {
            let w = self.matrix.get(n as usize, l) * config.get(n as usize) as f64;
            if w > 0.0 {
                if t < w {
                    return Ok(n as usize);
                }
                t -= w;
                last = Some(n as usize);
            }
        }
        // Rounding left a sliver past the last stimulated channel.
        Ok(last.unwrap_or(rows[rows.len() - 1] as usize))
    }
}

fn no_channel(l: usize) -> Error {
    Error::invalid(format!("excited level {l} has no emission channel inside the basis"))
}

/// Absorption m → l followed by emission l → n.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepEvent {
    pub from: u32,
    pub excited: u32,
    pub to: u32,
}

/// Result of one pulse; the configuration itself is updated in place.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseStepOutcome {
    pub event: Option<StepEvent>,
    /// Excitation probability p evaluated before the pulse.
    pub p: f64,
}

/// Apply one pulse to `config`.
///
/// With probability 1 − p nothing happens. Otherwise (l, m) is drawn with
/// weight Γ^abs_{lm}·n_m, the atom leaves m, and its destination n is drawn
/// with weight Γ^sp_{nl}·(n_n + 1) on the configuration without it.
pub fn pulse_step<R: Rng + ?Sized>(
    config: &mut Configuration,
    pulse: &PulseRates,
    emission: &EmissionTable,
    rng: &mut R,
) -> Result<PulseStepOutcome> {
    let p = pulse.excitation_probability(config);
    if p > 1.0 {
        return Err(Error::PerturbativeBound {
            p,
            context: "excitation probability per pulse exceeds 1".into(),
        });
    }
    let u = rng.random::<f64>();
    if u >= p {
        return Ok(PulseStepOutcome { event: None, p });
    }
    // Conditional on u < p, u/2 is uniform on [0, Σ Γ_m n_m).
    let (m, l) = pick_absorption(config, pulse, 0.5 * u);
    config.remove(m);
    let n = emission.sample_destination(l, config, rng)?;
    config.add(n);
    Ok(PulseStepOutcome {
        event: Some(StepEvent {
            from: m as u32,
            excited: l as u32,
            to: n as u32,
        }),
        p,
    })
}

fn pick_absorption(config: &Configuration, pulse: &PulseRates, mut t: f64) -> (usize, usize) {
    let mut fallback = None;
    for &m in config.support() {
        let m = m as usize;
        let n_m = config.get(m) as f64;
        let w = pulse.depletion[m] * n_m;
        if w <= 0.0 {
            continue;
        }
        let (rows, vals) = pulse.matrix.column(m);
        if t < w {
            for (&l, &v) in rows.iter().zip(vals) {
                let wl = v * n_m;
                if t < wl {
                    return (m, l as usize);
                }
                t -= wl;
            }
            return (m, *rows.last().expect("positive depletion") as usize);
        }
        t -= w;
        fallback = Some((m, *rows.last().expect("positive depletion") as usize));
    }
    fallback.expect("p > 0 implies an occupied bright level")
}
