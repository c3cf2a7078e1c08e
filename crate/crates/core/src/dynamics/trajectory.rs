//! Single trajectories through a pulse schedule.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::step::{pulse_step, EmissionTable, PulseRates, WARN_EXCITATION_PROBABILITY};
use crate::basis::{Basis, Configuration};
use crate::error::{Error, Result};
use crate::matrix_elements::{AbsorptionBuilder, PulseSpec};
use crate::params::SimParams;
use crate::schedule::Schedule;

/// Per-trajectory RNG: the master seed selects the key, the trajectory index
/// the stream, so trajectories are independent of execution order.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Shared, immutable inputs for running a schedule on one basis.
///
/// Pulses that are never ramped are built once; ramped pulses are rebuilt
/// each cycle from their resolved parameters.
pub struct Engine<'a> {
    basis: &'a Basis,
    schedule: &'a Schedule,
    builder: AbsorptionBuilder<'a>,
    fixed: Vec<Option<Arc<PulseRates>>>,
    emission: Arc<EmissionTable>,
    rebuilds: AtomicU64,
}

impl<'a> Engine<'a> {
    pub fn new(
        basis: &'a Basis,
        schedule: &'a Schedule,
        params: &SimParams,
        emission: Arc<EmissionTable>,
    ) -> Result<Self> {
        Self::with_source(basis, schedule, params, emission, |b, pulse| b.build(pulse))
    }

    /// As [`Engine::new`], obtaining fixed-pulse matrices from `source`
    /// (for example a disk cache in front of the builder).
    pub fn with_source<F>(
        basis: &'a Basis,
        schedule: &'a Schedule,
        params: &SimParams,
        emission: Arc<EmissionTable>,
        mut source: F,
    ) -> Result<Self>
    where
        F: FnMut(&AbsorptionBuilder<'a>, &PulseSpec) -> Result<crate::matrix_elements::RateMatrix>,
    {
        schedule.validate(basis.dim())?;
        if emission.matrix().size() != basis.len() {
            return Err(Error::invalid("emission table does not match the basis"));
        }
        let builder = AbsorptionBuilder::new(basis, params)?;
        let mut fixed = Vec::with_capacity(schedule.cycle.len());
        for (i, pulse) in schedule.cycle.iter().enumerate() {
            if schedule.is_ramped(i) {
                fixed.push(None);
            } else {
                let m = source(&builder, pulse)?;
                if m.size() != basis.len() {
                    return Err(Error::invalid("absorption matrix does not match the basis"));
                }
                fixed.push(Some(Arc::new(PulseRates::new(m)?)));
            }
        }
        Ok(Engine {
            basis,
            schedule,
            builder,
            fixed,
            emission,
            rebuilds: AtomicU64::new(0),
        })
    }

    pub fn basis(&self) -> &'a Basis {
        self.basis
    }

    pub fn schedule(&self) -> &'a Schedule {
        self.schedule
    }

    pub fn emission(&self) -> &EmissionTable {
        &self.emission
    }

    pub fn builder(&self) -> &AbsorptionBuilder<'a> {
        &self.builder
    }

    /// Number of ramped-pulse matrices built so far.
    pub fn ramped_rebuilds(&self) -> u64 {
        self.rebuilds.load(Ordering::Relaxed)
    }

    /// Matrices of every pulse of cycle `c`, in schedule order.
    pub fn cycle_rates(&self, c: usize) -> Result<Vec<Arc<PulseRates>>> {
        let resolved = if self.fixed.iter().any(Option::is_none) {
            Some(self.schedule.resolve_cycle(c)?)
        } else {
            None
        };
        self.fixed
            .iter()
            .enumerate()
            .map(|(i, f)| match f {
                Some(r) => Ok(Arc::clone(r)),
                None => {
                    let spec = &resolved.as_ref().expect("resolved when ramped")[i];
                    self.rebuilds.fetch_add(1, Ordering::Relaxed);
                    Ok(Arc::new(PulseRates::new(self.builder.build(spec)?)?))
                }
            })
            .collect()
    }

    /// Whether any pulse is rebuilt per cycle.
    pub fn has_ramps(&self) -> bool {
        self.fixed.iter().any(Option::is_none)
    }
}

/// What to record along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct RecorderSpec {
    /// Record every `stride` completed cycles (and at 0 and the end).
    pub stride: usize,
    /// Level ids whose occupations are recorded.
    pub watched: Vec<usize>,
    pub log_events: bool,
}

impl RecorderSpec {
    pub fn new(stride: usize, watched: Vec<usize>) -> Self {
        RecorderSpec {
            stride,
            watched,
            log_events: false,
        }
    }

    pub fn with_events(mut self) -> Self {
        self.log_events = true;
        self
    }

    fn validate(&self, levels: usize) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::invalid("recorder stride must be ≥ 1"));
        }
        if let Some(&w) = self.watched.iter().find(|&&w| w >= levels) {
            return Err(Error::invalid(format!("watched level id {w} outside basis")));
        }
        Ok(())
    }
}

/// Snapshot after `cycle` completed cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub cycle: usize,
    /// Ramp channel values of the last applied cycle.
    pub ramp: Vec<f64>,
    /// Occupations of the watched levels.
    pub occupations: Vec<u32>,
    pub mean_shell: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmissionEvent {
    pub cycle: u32,
    pub pulse: u16,
    pub from: u32,
    pub excited: u32,
    pub to: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub pulses: u64,
    pub excitations: u64,
    pub max_p: f64,
    /// Pulses whose excitation probability exceeded the warning level.
    pub warnings: u64,
}

impl StepStats {
    pub fn merge(&mut self, o: &StepStats) {
        self.pulses += o.pulses;
        self.excitations += o.excitations;
        self.max_p = self.max_p.max(o.max_p);
        self.warnings += o.warnings;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub stream: u64,
    pub atoms: u32,
    pub observations: Vec<Observation>,
    pub events: Vec<EmissionEvent>,
    pub final_config: Configuration,
    pub stats: StepStats,
    /// Largest excitation probability seen for each pulse of the cycle.
    pub pulse_max_p: Vec<f64>,
}

impl TrajectoryRecord {
    /// Fraction of atoms in the `k`-th watched level per observation.
    pub fn fractions(&self, k: usize) -> Vec<f64> {
        self.observations
            .iter()
            .map(|o| o.occupations[k] as f64 / self.atoms as f64)
            .collect()
    }
}

fn observe(engine: &Engine, config: &Configuration, cycle: usize, watched: &[usize]) -> Observation {
    let sched = engine.schedule();
    let ramp = if sched.ramps.is_empty() {
        Vec::new()
    } else {
        sched.ramp_values(cycle.saturating_sub(1))
    };
    Observation {
        cycle,
        ramp,
        occupations: watched.iter().map(|&w| config.get(w)).collect(),
        mean_shell: config.mean_shell(engine.basis()),
    }
}

/// Run the full schedule from `initial`, drawing from `rng`.
pub fn run_trajectory<R: Rng + ?Sized>(
    engine: &Engine,
    initial: Configuration,
    rng: &mut R,
    recorder: &RecorderSpec,
) -> Result<TrajectoryRecord> {
    run_cycles(engine, initial, rng, recorder, 0, engine.schedule().total_cycles)
}

/// Run cycles `start..end` of the schedule. Observation cycle labels count
/// completed schedule cycles.
pub fn run_cycles<R: Rng + ?Sized>(
    engine: &Engine,
    initial: Configuration,
    rng: &mut R,
    recorder: &RecorderSpec,
    start: usize,
    end: usize,
) -> Result<TrajectoryRecord> {
    let mut state = TrajectoryState::begin(engine, initial, recorder, start, end)?;
    let static_rates = if engine.has_ramps() {
        None
    } else {
        Some(engine.cycle_rates(start.min(engine.schedule().total_cycles.saturating_sub(1)))?)
    };
    for c in start..end {
        let owned;
        let rates = match &static_rates {
            Some(r) => r,
            None => {
                owned = engine.cycle_rates(c)?;
                &owned
            }
        };
        state.advance(engine, rates, rng)?;
    }
    Ok(state.finish())
}

/// A trajectory in progress over the cycle window `[start, end)`.
///
/// Callers supply the matrices of each cycle in order, which lets an
/// ensemble share ramped matrices between trajectories.
#[derive(Clone, Debug)]
pub struct TrajectoryState {
    recorder: RecorderSpec,
    start: usize,
    end: usize,
    next: usize,
    atoms: u32,
    config: Configuration,
    stats: StepStats,
    pulse_max_p: Vec<f64>,
    events: Vec<EmissionEvent>,
    observations: Vec<Observation>,
}

impl TrajectoryState {
    pub fn begin(
        engine: &Engine,
        initial: Configuration,
        recorder: &RecorderSpec,
        start: usize,
        end: usize,
    ) -> Result<Self> {
        recorder.validate(engine.basis().len())?;
        if initial.levels() != engine.basis().len() {
            return Err(Error::invalid("initial configuration does not match the basis"));
        }
        if end > engine.schedule().total_cycles || start > end {
            return Err(Error::invalid(format!(
                "cycle window [{start}, {end}) outside schedule of {} cycles",
                engine.schedule().total_cycles
            )));
        }
        let observations = vec![observe(engine, &initial, start, &recorder.watched)];
        Ok(TrajectoryState {
            recorder: recorder.clone(),
            start,
            end,
            next: start,
            atoms: initial.atoms(),
            config: initial,
            stats: StepStats::default(),
            pulse_max_p: vec![0.0; engine.schedule().cycle.len()],
            events: Vec::new(),
            observations,
        })
    }

    /// Next cycle to be applied.
    pub fn next_cycle(&self) -> usize {
        self.next
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    /// Apply one cycle whose pulse matrices are `rates`.
    pub fn advance<R: Rng + ?Sized>(&mut self, engine: &Engine, rates: &[Arc<PulseRates>], rng: &mut R) -> Result<()> {
        let c = self.next;
        if c >= self.end {
            return Err(Error::invalid("trajectory already reached the end of its window"));
        }
        if rates.len() != self.pulse_max_p.len() {
            return Err(Error::invalid("cycle matrices do not match the schedule"));
        }
        for (i, pulse) in rates.iter().enumerate() {
            let out = pulse_step(&mut self.config, pulse, engine.emission(), rng)?;
            self.stats.pulses += 1;
            self.stats.max_p = self.stats.max_p.max(out.p);
            self.pulse_max_p[i] = self.pulse_max_p[i].max(out.p);
            if out.p > WARN_EXCITATION_PROBABILITY {
                self.stats.warnings += 1;
            }
            if let Some(e) = out.event {
                self.stats.excitations += 1;
                if self.recorder.log_events {
                    self.events.push(EmissionEvent {
                        cycle: c as u32,
                        pulse: i as u16,
                        from: e.from,
                        excited: e.excited,
                        to: e.to,
                    });
                }
            }
        }
        let done = c + 1;
        self.next = done;
        if (done - self.start).is_multiple_of(self.recorder.stride) || done == self.end {
            self.observations
                .push(observe(engine, &self.config, done, &self.recorder.watched));
        }
        Ok(())
    }

    pub fn finish(self) -> TrajectoryRecord {
        TrajectoryRecord {
            seed: 0,
            stream: 0,
            atoms: self.atoms,
            observations: self.observations,
            events: self.events,
            final_config: self.config,
            stats: self.stats,
            pulse_max_p: self.pulse_max_p,
        }
    }
}

/// Event counts per consecutive window of `window` cycles over
/// `[start, end)`; a trailing partial window is dropped.
pub fn emission_counts(events: &[EmissionEvent], start: usize, end: usize, window: usize) -> Result<Vec<u64>> {
    if window == 0 {
        return Err(Error::invalid("window must be ≥ 1 cycle"));
    }
    let n = end.saturating_sub(start) / window;
    let mut counts = vec![0u64; n];
    for e in events {
        let c = e.cycle as usize;
        if c >= start {
            let k = (c - start) / window;
            if k < n {
                counts[k] += 1;
            }
        }
    }
    Ok(counts)
}
