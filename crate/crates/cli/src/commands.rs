//! The four subcommands. Each reads a [`RunConfig`], runs, and writes its
//! outputs into the output directory.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use lasercond::analysis::{
    condensation_criterion, dark_states_of, hysteresis_extract, Branch, CriterionReport, DepletionProfile,
    HysteresisReport, Verdict,
};
use lasercond::basis::{Basis, Configuration, ThermalDistribution};
use lasercond::dynamics::{
    calibrate_pulse_areas_with, run_ensemble, EmissionTable, Engine, EnsembleResult, EnsembleSpec, InitialState,
    RecorderSpec,
};
use lasercond::matrix_elements::{leaky_columns, AbsorptionBuilder};
use lasercond::params::SimParams;
use lasercond::schedule::Ramp;
use lasercond::{parallel, EmissionQuadrature, RateMatrix, Schedule};
use serde::Serialize;

use crate::cache::RateCache;
use crate::config::{level_label, Area, InitialConfig, Levels, RunConfig};
use crate::error::CliError;
use crate::output::{events_csv, observables_csv, write_atomic, write_json};

/// Command-line overrides.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Fraction whose first crossing is reported as the cooling time.
pub const CONDENSED_FRACTION: f64 = 0.9;

/// A configuration resolved into simulator inputs, with calibrated areas.
pub struct Prepared {
    pub config: RunConfig,
    pub basis: Basis,
    pub params: SimParams,
    pub schedule: Schedule,
    pub initial: InitialState,
    pub levels: Levels,
    pub cache: RateCache,
    pub out_dir: PathBuf,
}

pub fn prepare(mut config: RunConfig, opts: &RunOptions) -> Result<Prepared, CliError> {
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    if let Some(o) = &opts.out {
        config.output.dir = o.clone();
    }
    if opts.threads == Some(0) {
        return Err(CliError::Config("--threads must be ≥ 1".into()));
    }
    config.validate()?;
    let basis = config.basis()?;
    let params = config.params.sim_params();
    let levels = config.levels(&basis)?;
    let cache = RateCache::new(config.cache_dir());
    let (initial, level_probs) = match &config.initial {
        InitialConfig::Thermal { mean_shell } => {
            let th = ThermalDistribution::new(&basis, *mean_shell)?;
            (InitialState::Distribution(th.probs.clone()), th.probs)
        }
        InitialConfig::Point { .. } => {
            let id = levels.initial_point.expect("point level resolved");
            let mut probs = vec![0.0; basis.len()];
            probs[id] = 1.0;
            (
                InitialState::Fixed(Configuration::point(basis.len(), id, config.atoms)),
                probs,
            )
        }
    };
    let mut schedule = config.schedule(&params)?;
    if config.params.omega0_tau_abs == Area::Auto {
        let n = config.params.calibration_atoms.unwrap_or(config.atoms) as f64;
        let occ: Vec<f64> = level_probs.iter().map(|p| p * n).collect();
        let areas = calibrate_pulse_areas_with(
            &basis,
            &schedule,
            &params,
            &occ,
            config.params.target_excitation,
            |b, pulse| cache.absorption(b, pulse),
        )?;
        schedule = schedule.with_pulse_areas(&areas)?;
    }
    let out_dir = config.output.dir.clone();
    Ok(Prepared {
        config,
        basis,
        params,
        schedule,
        initial,
        levels,
        cache,
        out_dir,
    })
}

impl Prepared {
    pub fn pulse_areas(&self) -> Vec<f64> {
        self.schedule.cycle.iter().map(|p| p.omega0_tau_abs).collect()
    }

    fn quadrature(&self) -> Result<EmissionQuadrature, CliError> {
        Ok(EmissionQuadrature::new(
            self.config.params.emission,
            self.config.params.quadrature_order,
        )?)
    }

    pub fn spontaneous(&self) -> Result<RateMatrix, CliError> {
        Ok(self.cache.spontaneous(&self.basis, &self.params, &self.quadrature()?)?)
    }

    /// Absorption matrices of every pulse of cycle 0.
    pub fn cycle0_matrices(&self) -> Result<Vec<RateMatrix>, CliError> {
        let builder = AbsorptionBuilder::new(&self.basis, &self.params)?;
        self.schedule
            .resolve_cycle(0)?
            .iter()
            .map(|p| Ok(self.cache.absorption(&builder, p)?))
            .collect()
    }

    /// Run the ensemble, recording `watched`.
    pub fn run(&self, watched: &[usize], threads: Option<usize>) -> Result<(EnsembleResult, RunCounters), CliError> {
        let sp = self.spontaneous()?;
        let leaky = leaky_columns(&sp);
        let emission = Arc::new(EmissionTable::new(sp)?);
        let engine = Engine::with_source(&self.basis, &self.schedule, &self.params, emission, |b, p| {
            self.cache.absorption(b, p)
        })?;
        let mut recorder = RecorderSpec::new(self.config.recorder.stride, watched.to_vec());
        recorder.log_events = self.config.recorder.events;
        let spec = EnsembleSpec::new(self.config.atoms, self.config.trajectories, self.config.seed, recorder);
        let initial = &self.initial;
        let result = parallel::with_threads(threads, || run_ensemble(&engine, initial, &spec))?;
        Ok((
            result,
            RunCounters {
                rate_matrices_built: self.cache.built(),
                rate_matrices_loaded: self.cache.loaded(),
                ramped_rebuilds: engine.ramped_rebuilds(),
                leaky_spontaneous_columns: leaky,
            },
        ))
    }

    fn label(&self, id: usize) -> String {
        level_label(&self.basis.level(id))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunCounters {
    pub rate_matrices_built: u64,
    pub rate_matrices_loaded: u64,
    pub ramped_rebuilds: u64,
    pub leaky_spontaneous_columns: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSummary {
    pub command: &'static str,
    pub seed: u64,
    pub atoms: u32,
    pub trajectories: usize,
    pub cycles: usize,
    pub basis_levels: usize,
    pub pulse_areas: Vec<f64>,
    pub watched: Vec<String>,
    pub final_mean: Vec<f64>,
    /// Final ensemble-mean fraction of the first watched level.
    pub final_condensate_fraction: f64,
    /// First recorded cycle at which that fraction reaches 0.9.
    pub cycles_to_90: Option<usize>,
    pub seconds_to_90: Option<f64>,
    pub pulses: u64,
    pub excitations: u64,
    pub max_excitation_probability: f64,
    pub excitation_warnings: u64,
    pub counters: RunCounters,
    pub wall_clock_seconds: f64,
}

pub struct SimulateOutput {
    pub summary: SimulateSummary,
    pub result: EnsembleResult,
}

fn write_observables(prep: &Prepared, watched: &[usize], result: &EnsembleResult) -> Result<(), CliError> {
    let channels = prep.schedule.ramp_channels();
    let csv = observables_csv(&prep.basis, &channels, watched, &result.rows);
    write_atomic(&prep.out_dir.join("observables.csv"), csv.as_bytes())?;
    if prep.config.recorder.events {
        write_atomic(
            &prep.out_dir.join("events.csv"),
            events_csv(&result.first_events).as_bytes(),
        )?;
    }
    Ok(())
}

fn summarize(
    command: &'static str,
    prep: &Prepared,
    watched: &[usize],
    result: &EnsembleResult,
    counters: RunCounters,
    started: Instant,
) -> Result<SimulateSummary, CliError> {
    let last = result.rows.last().expect("at least one row");
    let cycles_to_90 = result.first_cycle_reaching(0, CONDENSED_FRACTION);
    let seconds_to_90 = match cycles_to_90 {
        Some(c) => Some(
            prep.config
                .analysis
                .timing
                .cycles_to_seconds(c as f64, prep.config.analysis.trap_hz)?,
        ),
        None => None,
    };
    Ok(SimulateSummary {
        command,
        seed: prep.config.seed,
        atoms: prep.config.atoms,
        trajectories: prep.config.trajectories,
        cycles: prep.schedule.total_cycles,
        basis_levels: prep.basis.len(),
        pulse_areas: prep.pulse_areas(),
        watched: watched.iter().map(|&w| prep.label(w)).collect(),
        final_mean: last.mean.clone(),
        final_condensate_fraction: last.mean[0],
        cycles_to_90,
        seconds_to_90,
        pulses: result.stats.pulses,
        excitations: result.stats.excitations,
        max_excitation_probability: result.stats.max_p,
        excitation_warnings: result.stats.warnings,
        counters,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn simulate(config: RunConfig, opts: &RunOptions) -> Result<SimulateOutput, CliError> {
    let started = Instant::now();
    let prep = prepare(config, opts)?;
    let watched = prep.levels.watched.clone();
    let (result, counters) = prep.run(&watched, opts.threads)?;
    write_observables(&prep, &watched, &result)?;
    let summary = summarize("simulate", &prep, &watched, &result, counters, started)?;
    write_json(&prep.out_dir.join("summary.json"), &summary)?;
    Ok(SimulateOutput { summary, result })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DarkLevel {
    pub id: usize,
    pub level: String,
    pub depletion: f64,
    /// Depletion relative to the largest over the basis.
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DarkReport {
    pub tolerance: f64,
    pub max_depletion: f64,
    pub pulse_areas: Vec<f64>,
    pub dark: Vec<DarkLevel>,
}

impl DarkReport {
    pub fn contains(&self, label: &str) -> bool {
        self.dark.iter().any(|d| d.level == label)
    }
}

pub fn darkstates(config: RunConfig, opts: &RunOptions) -> Result<DarkReport, CliError> {
    let prep = prepare(config, opts)?;
    let mats = prep.cycle0_matrices()?;
    let profile = DepletionProfile::from_matrices(&mats)?;
    let tol = prep.config.analysis.dark_tolerance;
    let max = profile.max();
    let dark = dark_states_of(&profile, &prep.basis, tol)?
        .into_iter()
        .map(|d| DarkLevel {
            id: d.id,
            level: level_label(&d.level),
            depletion: d.depletion,
            relative: if max > 0.0 { d.depletion / max } else { 0.0 },
        })
        .collect();
    let report = DarkReport {
        tolerance: tol,
        max_depletion: max,
        pulse_areas: prep.pulse_areas(),
        dark,
    };
    write_json(&prep.out_dir.join("darkstates.json"), &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionSummary {
    pub target: String,
    pub condensing: bool,
    pub violating: Vec<String>,
    pub indeterminate: Vec<String>,
    pub min_gamma_tilde: Option<f64>,
    pub cooling_time_cycles: Option<f64>,
    pub cooling_time_seconds: Option<f64>,
    pub phase_diffusion_per_cycle: f64,
}

pub fn criterion(config: RunConfig, opts: &RunOptions) -> Result<(CriterionSummary, CriterionReport), CliError> {
    let prep = prepare(config, opts)?;
    let mats = prep.cycle0_matrices()?;
    let sp = prep.spontaneous()?;
    let refs: Vec<&RateMatrix> = mats.iter().collect();
    let a = &prep.config.analysis;
    let report = condensation_criterion(&refs, &sp, prep.levels.target, prep.config.atoms, &a.timing, a.trap_hz)?;
    let labels = |ids: &[usize]| ids.iter().map(|&i| prep.label(i)).collect::<Vec<_>>();
    let (violating, indeterminate) = match &report.verdict {
        Verdict::Condensing => (Vec::new(), Vec::new()),
        Verdict::NotCondensing {
            violating,
            indeterminate,
        } => (labels(violating), labels(indeterminate)),
    };
    let summary = CriterionSummary {
        target: prep.label(report.target),
        condensing: report.verdict.is_condensing(),
        violating,
        indeterminate,
        min_gamma_tilde: report.min_gamma_tilde(),
        cooling_time_cycles: report.cooling_time_cycles,
        cooling_time_seconds: report.cooling_time_seconds,
        phase_diffusion_per_cycle: report.phase_diffusion_per_cycle,
    };
    let mut csv = String::from("id,level,shell,gamma_tilde\n");
    for (id, g) in report.gamma_tilde.iter().enumerate() {
        csv.push_str(&format!(
            "{id},\"{}\",{},{}\n",
            prep.label(id),
            prep.basis.shell_of(id),
            crate::output::fmt_f64(*g)
        ));
    }
    write_atomic(&prep.out_dir.join("criterion.csv"), csv.as_bytes())?;
    write_json(&prep.out_dir.join("criterion.json"), &summary)?;
    Ok((summary, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct HysteresisSummary {
    pub channel: String,
    pub up_source: Vec<String>,
    pub down_source: Vec<String>,
    pub report: HysteresisReport,
    pub width: Option<f64>,
    /// Up-ramp transfer at a strictly larger ramp value than the down-ramp one.
    pub strictly_ordered: bool,
    pub simulation: SimulateSummary,
}

pub struct HysteresisOutput {
    pub summary: HysteresisSummary,
    pub up: Branch,
    pub down: Branch,
    pub result: EnsembleResult,
}

/// Rows labelled c report the ramp value of cycle c − 1, so a row belongs
/// to ramp `r` when c − 1 lies in [r.start, r.end).
fn branch(result: &EnsembleResult, ramp: &Ramp, channel: usize, cols: &[usize]) -> Result<Branch, CliError> {
    let rows: Vec<_> = result
        .rows
        .iter()
        .filter(|r| r.cycle >= 1 && (ramp.start..ramp.end).contains(&(r.cycle - 1)))
        .collect();
    Ok(Branch::new(
        rows.iter().map(|r| r.ramp[channel]).collect(),
        rows.iter().map(|r| cols.iter().map(|&k| r.mean[k]).sum()).collect(),
    )?)
}

pub fn hysteresis(config: RunConfig, opts: &RunOptions) -> Result<HysteresisOutput, CliError> {
    let started = Instant::now();
    let prep = prepare(config, opts)?;
    let channels = prep.schedule.ramp_channels();
    let Some(&(pulse, field)) = channels.first() else {
        return Err(CliError::Config("no ramp declared in the schedule".into()));
    };
    let mut ramps: Vec<&Ramp> = prep
        .schedule
        .ramps
        .iter()
        .filter(|r| r.pulse == pulse && r.field == field)
        .collect();
    ramps.sort_by_key(|r| r.start);
    let down_source = prep
        .levels
        .down_source
        .clone()
        .ok_or_else(|| CliError::Config("analysis.down_source is required outside 3D".into()))?;
    let mut watched = prep.levels.watched.clone();
    let mut column = |id: usize| match watched.iter().position(|&w| w == id) {
        Some(k) => k,
        None => {
            watched.push(id);
            watched.len() - 1
        }
    };
    let up_cols: Vec<usize> = prep.levels.up_source.iter().map(|&i| column(i)).collect();
    let down_cols: Vec<usize> = down_source.iter().map(|&i| column(i)).collect();
    let (result, counters) = prep.run(&watched, opts.threads)?;
    write_observables(&prep, &watched, &result)?;
    let up = branch(&result, ramps[0], 0, &up_cols)?;
    let down = match ramps.get(1) {
        Some(r) => branch(&result, r, 0, &down_cols)?,
        None => Branch::default(),
    };
    let report = hysteresis_extract(&up, &down, prep.config.analysis.threshold)?;
    let mut csv = String::from("branch,cycle,ramp,population\n");
    let fmt = crate::output::fmt_f64;
    for (name, b, r) in [
        ("up", &up, ramps[0]),
        ("down", &down, *ramps.get(1).unwrap_or(&ramps[0])),
    ] {
        let cycles: Vec<usize> = result
            .rows
            .iter()
            .filter(|row| row.cycle >= 1 && (r.start..r.end).contains(&(row.cycle - 1)))
            .map(|row| row.cycle)
            .collect();
        for ((c, x), p) in cycles.iter().zip(&b.ramp).zip(&b.population) {
            csv.push_str(&format!("{name},{c},{},{}\n", fmt(*x), fmt(*p)));
        }
    }
    write_atomic(&prep.out_dir.join("hysteresis.csv"), csv.as_bytes())?;
    let simulation = summarize("hysteresis", &prep, &watched, &result, counters, started)?;
    let summary = HysteresisSummary {
        channel: format!("p{pulse}_{}", field.label()),
        up_source: prep.levels.up_source.iter().map(|&i| prep.label(i)).collect(),
        down_source: down_source.iter().map(|&i| prep.label(i)).collect(),
        width: report.width(),
        strictly_ordered: matches!((report.up, report.down), (Some(u), Some(d)) if u > d),
        report,
        simulation,
    };
    write_json(&prep.out_dir.join("hysteresis.json"), &summary)?;
    Ok(HysteresisOutput {
        summary,
        up,
        down,
        result,
    })
}
