use std::sync::Arc;

use lasercond::basis::{sample_initial_configuration, Basis, Configuration, ThermalDistribution};
use lasercond::dynamics::*;
use lasercond::matrix_elements::{build_spontaneous_rates, EmissionPattern, EmissionQuadrature, PulseSpec};
use lasercond::parallel;
use lasercond::params::SimParams;
use lasercond::schedule::{figure_schedule, hysteresis_schedule, sideband_pulse, Figure, Schedule};
use proptest::prelude::*;

struct Fixture {
    basis: Basis,
    params: SimParams,
    emission: Arc<EmissionTable>,
    thermal: ThermalDistribution,
}

fn fixture(dim: usize, max_shell: u32, eta: f64, mean_shell: f64) -> Fixture {
    let basis = Basis::enumerate(dim, max_shell).unwrap();
    let params = SimParams::with_eta(eta);
    let quad = EmissionQuadrature::new(EmissionPattern::Isotropic, 16).unwrap();
    let sp = build_spontaneous_rates(&basis, &params, &quad).unwrap();
    let thermal = ThermalDistribution::new(&basis, mean_shell).unwrap();
    Fixture {
        basis,
        params,
        emission: Arc::new(EmissionTable::new(sp).unwrap()),
        thermal,
    }
}

fn calibrated(f: &Fixture, sched: Schedule, atoms: u32, target: f64) -> Schedule {
    let occ: Vec<f64> = f.thermal.probs.iter().map(|p| p * atoms as f64).collect();
    let areas = calibrate_pulse_areas(&f.basis, &sched, &f.params, &occ, target).unwrap();
    sched.with_pulse_areas(&areas).unwrap()
}

fn fig1_small(cycles: usize, atoms: u32) -> (Fixture, Schedule) {
    let f = fixture(3, 8, 2.0, 2.0);
    let sched = figure_schedule(Figure::Fig1, &f.params).with_total_cycles(cycles);
    let sched = calibrated(&f, sched, atoms, 0.3);
    (f, sched)
}

fn fig3_small(atoms: u32) -> (Fixture, Schedule) {
    let f = fixture(3, 6, 2.0, 2.0);
    let sched = calibrated(&f, hysteresis_schedule(10, 50, &f.params), atoms, 0.3);
    (f, sched)
}

fn watched(b: &Basis) -> Vec<usize> {
    vec![b.id_of(&[0, 0, 0]).unwrap(), b.id_of(&[1, 0, 1]).unwrap()]
}

#[test]
fn identical_seeds_give_identical_records() {
    let (f, sched) = fig1_small(200, 20);
    let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
    let rec = RecorderSpec::new(10, watched(&f.basis)).with_events();
    let run = |seed| {
        let mut rng = trajectory_rng(seed, 3);
        let init = sample_initial_configuration(&f.thermal.probs, 20, &mut rng).unwrap();
        run_trajectory(&engine, init, &mut rng, &rec).unwrap()
    };
    let a = run(11);
    assert_eq!(a, run(11));
    assert_ne!(a.events, run(12).events);
}

#[test]
fn execution_mode_and_thread_count_do_not_change_results() {
    for (f, sched) in [fig1_small(150, 20), fig3_small(20)] {
        let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
        let init = InitialState::Distribution(f.thermal.probs.clone());
        let mut spec = EnsembleSpec::new(20, 12, 5, RecorderSpec::new(7, watched(&f.basis)).with_events());
        spec.keep_records = true;
        let par = parallel::with_threads(Some(3), || run_ensemble(&engine, &init, &spec).unwrap());
        let one = parallel::with_threads(Some(1), || run_ensemble(&engine, &init, &spec).unwrap());
        spec.execution = Execution::Sequential;
        let seq = run_ensemble(&engine, &init, &spec).unwrap();
        assert_eq!(par, seq);
        assert_eq!(par, one);
    }
}

#[test]
fn ensemble_trajectories_match_standalone_runs() {
    for (f, sched) in [fig1_small(120, 15), fig3_small(15)] {
        let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
        let rec = RecorderSpec::new(5, watched(&f.basis)).with_events();
        let mut spec = EnsembleSpec::new(15, 4, 21, rec.clone());
        spec.keep_records = true;
        let ens = run_ensemble(&engine, &InitialState::Distribution(f.thermal.probs.clone()), &spec).unwrap();
        for (i, r) in ens.records.as_ref().unwrap().iter().enumerate() {
            let mut rng = trajectory_rng(21, i as u64);
            let init = sample_initial_configuration(&f.thermal.probs, 15, &mut rng).unwrap();
            let mut alone = run_trajectory(&engine, init, &mut rng, &rec).unwrap();
            alone.seed = 21;
            alone.stream = i as u64;
            assert_eq!(r, &alone, "trajectory {i}");
        }
    }
}

#[test]
fn single_trajectory_ensemble_has_zero_spread() {
    let (f, sched) = fig1_small(50, 10);
    let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
    let spec = EnsembleSpec::new(10, 1, 2, RecorderSpec::new(10, watched(&f.basis)));
    let ens = run_ensemble(&engine, &InitialState::Distribution(f.thermal.probs.clone()), &spec).unwrap();
    assert!(ens.rows.iter().all(|r| r.std.iter().all(|&s| s == 0.0)));
}

#[test]
fn dark_ground_state_is_a_fixed_point() {
    let (f, sched) = fig1_small(300, 40);
    let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
    let init = InitialState::Fixed(Configuration::point(f.basis.len(), 0, 40));
    let spec = EnsembleSpec::new(40, 6, 9, RecorderSpec::new(50, vec![0]));
    let ens = run_ensemble(&engine, &init, &spec).unwrap();
    assert_eq!(ens.stats.excitations, 0);
    assert!(ens.rows.iter().all(|r| r.mean[0] == 1.0 && r.std[0] == 0.0));
}

#[test]
fn atom_number_is_conserved_along_long_runs() {
    let (f, sched) = fig1_small(5000, 30);
    let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
    let mut rng = trajectory_rng(1, 0);
    let init = sample_initial_configuration(&f.thermal.probs, 30, &mut rng).unwrap();
    let r = run_trajectory(&engine, init, &mut rng, &RecorderSpec::new(1, vec![])).unwrap();
    assert_eq!(r.final_config.atoms(), 30);
    assert_eq!(r.final_config.occupations().iter().sum::<u32>(), 30);
    assert_eq!(r.stats.pulses, 40_000);
}

#[test]
fn single_atom_ensemble_matches_exact_marginals() {
    let f = fixture(1, 5, 1.0, 1.5);
    let sched = Schedule::new(vec![sideband_pulse(-1, None, 1), sideband_pulse(-2, None, 1)], 30).with_pulse_area(0.5);
    let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
    let space = ConfigSpace::new(f.basis.len(), 1, DEFAULT_STATE_BOUND).unwrap();
    let exact = exact_propagate(
        &engine,
        &space,
        &ExactState::multinomial(&space, &f.thermal.probs).unwrap(),
    )
    .unwrap();
    let expect = exact.mean_occupations(&space);
    let n = 20_000;
    let spec = EnsembleSpec::new(1, n, 4, RecorderSpec::new(30, (0..f.basis.len()).collect()));
    let ens = run_ensemble(&engine, &InitialState::Distribution(f.thermal.probs.clone()), &spec).unwrap();
    let last = ens.rows.last().unwrap();
    for (k, &p) in expect.iter().enumerate() {
        let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1e-4);
        assert!(
            (last.mean[k] - p).abs() < 4.0 * sigma,
            "level {k}: mc {} exact {p}",
            last.mean[k]
        );
    }
}

#[test]
fn exact_columns_preserve_trace() {
    let f = fixture(1, 5, 1.0, 1.5);
    let space = ConfigSpace::new(f.basis.len(), 3, DEFAULT_STATE_BOUND).unwrap();
    let sched = Schedule::new(vec![sideband_pulse(-1, None, 1)], 1).with_pulse_area(0.3);
    let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
    let rates = &engine.cycle_rates(0).unwrap()[0];
    let t = transition_matrix(&space, rates, engine.emission()).unwrap();
    for j in 0..space.len() {
        let s: f64 = t.column(j).iter().map(|e| e.1).sum();
        assert!((s - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn oversized_area_is_rejected_during_the_run() {
    let f = fixture(1, 5, 1.0, 1.5);
    let sched = Schedule::new(vec![PulseSpec::new(-1, vec![1.0])], 5).with_pulse_area(0.99);
    let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
    let init = InitialState::Fixed(Configuration::point(f.basis.len(), 3, 200));
    let err = run_ensemble(
        &engine,
        &init,
        &EnsembleSpec::new(200, 2, 0, RecorderSpec::new(1, vec![])),
    )
    .unwrap_err();
    assert!(err.is_physics());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pulse_steps_conserve_atoms(seed in any::<u64>(), atoms in 1u32..60, cycles in 1usize..40) {
        let (f, sched) = fig1_small(cycles, 60);
        let engine = Engine::new(&f.basis, &sched, &f.params, f.emission.clone()).unwrap();
        let mut rng = trajectory_rng(seed, 0);
        let init = sample_initial_configuration(&f.thermal.probs, atoms, &mut rng).unwrap();
        let r = run_trajectory(&engine, init, &mut rng, &RecorderSpec::new(1, vec![0])).unwrap();
        prop_assert_eq!(r.final_config.atoms(), atoms);
        prop_assert_eq!(r.final_config.occupations().iter().sum::<u32>(), atoms);
        prop_assert!(r.observations.iter().all(|o| o.occupations[0] <= atoms));
    }
}
