//! Stochastic and exact evolution of configurations through cooling cycles.

pub mod calibrate;
pub mod ensemble;
pub mod exact;
pub mod step;
pub mod trajectory;

pub use calibrate::{
    calibrate_pulse_areas, calibrate_pulse_areas_with, excitation_on_mean, AUTO_TARGET_P, MAX_AUTO_AREA,
};
pub use ensemble::{run_ensemble, EnsembleResult, EnsembleSpec, Execution, InitialState, StatRow};
pub use exact::{
    exact_propagate, exact_propagate_cycles, transition_matrix, ConfigSpace, ExactState, DEFAULT_STATE_BOUND,
};
pub use step::{pulse_step, EmissionTable, PulseRates, PulseStepOutcome, StepEvent};
pub use trajectory::{
    emission_counts, run_cycles, run_trajectory, trajectory_rng, EmissionEvent, Engine, Observation, RecorderSpec,
    StepStats, TrajectoryRecord, TrajectoryState,
};
