//! Independent trajectories and their per-cycle statistics.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::step::PulseRates;
use super::trajectory::{
    run_cycles, trajectory_rng, Engine, RecorderSpec, StepStats, TrajectoryRecord, TrajectoryState,
};
use crate::basis::{sample_initial_configuration, Configuration};
use crate::error::{Error, Result};
use crate::parallel;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Each atom drawn independently from a distribution over levels.
    Distribution(Vec<f64>),
    /// Every trajectory starts from the same configuration.
    Fixed(Configuration),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Parallel,
    Sequential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub atoms: u32,
    pub trajectories: usize,
    pub seed: u64,
    pub recorder: RecorderSpec,
    /// Cycle window; `None` runs the whole schedule.
    pub cycles: Option<(usize, usize)>,
    pub execution: Execution,
    pub keep_records: bool,
}

impl EnsembleSpec {
    pub fn new(atoms: u32, trajectories: usize, seed: u64, recorder: RecorderSpec) -> Self {
        EnsembleSpec {
            atoms,
            trajectories,
            seed,
            recorder,
            cycles: None,
            execution: Execution::Parallel,
            keep_records: false,
        }
    }
}

/// Ensemble mean and sample standard deviation at one recorded cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct StatRow {
    pub cycle: usize,
    pub ramp: Vec<f64>,
    /// Occupation fractions of the watched levels.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub mean_shell: f64,
    pub mean_shell_std: f64,
}

impl StatRow {
    /// Standard error of the `k`-th watched fraction.
    pub fn sem(&self, k: usize, trajectories: usize) -> f64 {
        self.std[k] / (trajectories as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub trajectories: usize,
    pub atoms: u32,
    pub rows: Vec<StatRow>,
    pub finals: Vec<Configuration>,
    pub stats: StepStats,
    /// Per-pulse maximum excitation probability over all trajectories.
    pub pulse_max_p: Vec<f64>,
    /// Full records, present when requested.
    pub records: Option<Vec<TrajectoryRecord>>,
    /// Events of trajectory 0 when event logging is on.
    pub first_events: Vec<super::trajectory::EmissionEvent>,
}

impl EnsembleResult {
    /// Mean fraction of the `k`-th watched level per row.
    pub fn mean_series(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean[k]).collect()
    }

    /// First recorded cycle whose mean fraction of watched level `k`
    /// reaches `level`.
    pub fn first_cycle_reaching(&self, k: usize, level: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.mean[k] >= level).map(|r| r.cycle)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run `spec.trajectories` trajectories; trajectory i uses stream i of the
/// master seed. The reduction runs in index order, so the result is
/// bitwise identical for every thread count and execution mode.
pub fn run_ensemble(engine: &Engine, initial: &InitialState, spec: &EnsembleSpec) -> Result<EnsembleResult> {
    if spec.trajectories == 0 {
        return Err(Error::invalid("trajectory count must be ≥ 1"));
    }
    let levels = engine.basis().len();
    match initial {
        InitialState::Distribution(p) if p.len() != levels => {
            return Err(Error::invalid("initial distribution does not match the basis"))
        }
        InitialState::Fixed(c) if c.levels() != levels => {
            return Err(Error::invalid("initial configuration does not match the basis"))
        }
        _ => {}
    }
    let (start, end) = spec.cycles.unwrap_or((0, engine.schedule().total_cycles));
    let setup = |i: usize| -> Result<(ChaCha8Rng, Configuration, RecorderSpec)> {
        let mut rng = trajectory_rng(spec.seed, i as u64);
        let config = match initial {
            InitialState::Distribution(p) => sample_initial_configuration(p, spec.atoms, &mut rng)?,
            InitialState::Fixed(c) => c.clone(),
        };
        let mut rec = spec.recorder.clone();
        rec.log_events &= i == 0 || spec.keep_records;
        Ok((rng, config, rec))
    };
    let mut results = if engine.has_ramps() {
        run_lockstep(engine, spec, start, end, &setup)
    } else {
        let one = |i: usize| -> Result<TrajectoryRecord> {
            let (mut rng, config, rec) = setup(i)?;
            run_cycles(engine, config, &mut rng, &rec, start, end)
        };
        match spec.execution {
            Execution::Parallel => parallel::map_indexed(spec.trajectories, one),
            Execution::Sequential => parallel::map_indexed_seq(spec.trajectories, one),
        }
    };
    for (i, r) in results.iter_mut().enumerate() {
        if let Ok(r) = r {
            r.seed = spec.seed;
            r.stream = i as u64;
        }
    }
    let records: Vec<TrajectoryRecord> = results.into_iter().collect::<Result<_>>()?;
    Ok(reduce(records, spec))
}

/// Cycles whose ramped matrices are built together and shared by all
/// trajectories.
const LOCKSTEP_BLOCK: usize = 64;

/// Ramped schedules: every trajectory advances through a block of cycles
/// using matrices built once per cycle. Each trajectory keeps its own RNG
/// stream, so results match [`run_cycles`] on the same stream.
fn run_lockstep<S>(
    engine: &Engine,
    spec: &EnsembleSpec,
    start: usize,
    end: usize,
    setup: &S,
) -> Vec<Result<TrajectoryRecord>>
where
    S: Fn(usize) -> Result<(ChaCha8Rng, Configuration, RecorderSpec)> + Sync,
{
    let mut states: Vec<Result<(TrajectoryState, ChaCha8Rng)>> = (0..spec.trajectories)
        .map(|i| {
            let (rng, config, rec) = setup(i)?;
            Ok((TrajectoryState::begin(engine, config, &rec, start, end)?, rng))
        })
        .collect();
    let mut c = start;
    while c < end {
        let hi = (c + LOCKSTEP_BLOCK).min(end);
        let build = |k: usize| engine.cycle_rates(c + k);
        let block: Result<Vec<Vec<Arc<PulseRates>>>> = match spec.execution {
            Execution::Parallel => parallel::map_indexed(hi - c, build),
            Execution::Sequential => parallel::map_indexed_seq(hi - c, build),
        }
        .into_iter()
        .collect();
        let block = match block {
            Ok(b) => b,
            Err(e) => return vec![Err(e)],
        };
        let step = |_: usize, s: &mut Result<(TrajectoryState, ChaCha8Rng)>| {
            if let Ok((st, rng)) = s {
                for rates in &block {
                    if let Err(e) = st.advance(engine, rates, rng) {
                        *s = Err(e);
                        return;
                    }
                }
            }
        };
        match spec.execution {
            Execution::Parallel => parallel::map_mut(&mut states, step),
            Execution::Sequential => parallel::map_mut_seq(&mut states, step),
        };
        c = hi;
    }
    states.into_iter().map(|s| s.map(|(st, _)| st.finish())).collect()
}

fn reduce(mut records: Vec<TrajectoryRecord>, spec: &EnsembleSpec) -> EnsembleResult {
    let n_rows = records[0].observations.len();
    let n_watch = spec.recorder.watched.len();
    let atoms = records[0].atoms as f64;
    let mut rows = Vec::with_capacity(n_rows);
    let mut buf = vec![0.0; records.len()];
    for r in 0..n_rows {
        let head = &records[0].observations[r];
        let mut mean = Vec::with_capacity(n_watch);
        let mut std = Vec::with_capacity(n_watch);
        for k in 0..n_watch {
            for (b, rec) in buf.iter_mut().zip(&records) {
                *b = rec.observations[r].occupations[k] as f64 / atoms;
            }
            let (m, s) = mean_std(&buf);
            mean.push(m);
            std.push(s);
        }
        for (b, rec) in buf.iter_mut().zip(&records) {
            *b = rec.observations[r].mean_shell;
        }
        let (ms, mss) = mean_std(&buf);
        rows.push(StatRow {
            cycle: head.cycle,
            ramp: head.ramp.clone(),
            mean,
            std,
            mean_shell: ms,
            mean_shell_std: mss,
        });
    }
    let mut stats = StepStats::default();
    let mut pulse_max_p = vec![0.0f64; records[0].pulse_max_p.len()];
    for rec in &records {
        stats.merge(&rec.stats);
        for (a, b) in pulse_max_p.iter_mut().zip(&rec.pulse_max_p) {
            *a = a.max(*b);
        }
    }
    let finals = records.iter().map(|r| r.final_config.clone()).collect();
    let first_events = std::mem::take(&mut records[0].events);
    if spec.keep_records {
        records[0].events = first_events.clone();
    }
    EnsembleResult {
        trajectories: records.len(),
        atoms: records[0].atoms,
        rows,
        finals,
        stats,
        pulse_max_p,
        records: spec.keep_records.then_some(records),
        first_events,
    }
}
