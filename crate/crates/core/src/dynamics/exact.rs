//! Exact propagation of the configuration distribution for small systems.

use std::collections::HashMap;

use super::step::{EmissionTable, PulseRates};
use super::trajectory::Engine;
use crate::basis::{binomial, Configuration};
use crate::error::{Error, Result};

/// Default bound on the number of configurations.
pub const DEFAULT_STATE_BOUND: usize = 200_000;

/// Tolerance on the column sums of every transition matrix.
pub const TRACE_TOLERANCE: f64 = 1e-12;

/// All occupation vectors of `atoms` atoms over `levels` levels.
#[derive(Clone, Debug)]
pub struct ConfigSpace {
    levels: usize,
    atoms: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl ConfigSpace {
    pub fn new(levels: usize, atoms: u32, bound: usize) -> Result<Self> {
        if levels == 0 || atoms == 0 {
            return Err(Error::invalid("configuration space needs ≥ 1 level and ≥ 1 atom"));
        }
        let count = binomial(atoms as u64 + levels as u64 - 1, atoms as u64);
        if count > bound as u128 {
            return Err(Error::StateSpace { count, bound });
        }
        let mut states = Vec::with_capacity(count as usize);
        let mut cur = vec![0u32; levels];
        fill(&mut cur, 0, atoms, &mut states);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(ConfigSpace {
            levels,
            atoms,
            states,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn atoms(&self) -> u32 {
        self.atoms
    }

    pub fn occupations(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill(cur, pos + 1, left - k, out);
    }
    cur[pos] = 0;
}

/// Probability vector over a [`ConfigSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExactState {
    probs: Vec<f64>,
}

impl ExactState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("probabilities must be ≥ 0"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > TRACE_TOLERANCE * probs.len().max(1) as f64 {
            return Err(Error::invalid(format!("probabilities sum to {s}, not 1")));
        }
        Ok(ExactState { probs })
    }

    /// Certainty on a single configuration.
    pub fn point(space: &ConfigSpace, occ: &[u32]) -> Result<Self> {
        let i = space
            .index_of(occ)
            .ok_or_else(|| Error::invalid("configuration not in the space"))?;
        let mut probs = vec![0.0; space.len()];
        probs[i] = 1.0;
        Ok(ExactState { probs })
    }

    /// Atoms drawn independently from `level_probs` (multinomial law).
    pub fn multinomial(space: &ConfigSpace, level_probs: &[f64]) -> Result<Self> {
        if level_probs.len() != space.levels() {
            return Err(Error::invalid("level distribution does not match the space"));
        }
        let z: f64 = level_probs.iter().sum();
        let ln_fact = |n: u32| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
        let ln_n = ln_fact(space.atoms());
        let probs: Vec<f64> = space
            .states
            .iter()
            .map(|s| {
                let mut lp = ln_n;
                for (&k, &p) in s.iter().zip(level_probs) {
                    if k > 0 {
                        if p <= 0.0 {
                            return 0.0;
                        }
                        lp += k as f64 * (p / z).ln() - ln_fact(k);
                    }
                }
                lp.exp()
            })
            .collect();
        let s: f64 = probs.iter().sum();
        Ok(ExactState {
            probs: probs.into_iter().map(|p| p / s).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Mean occupation of every level.
    pub fn mean_occupations(&self, space: &ConfigSpace) -> Vec<f64> {
        let mut out = vec![0.0; space.levels()];
        for (p, s) in self.probs.iter().zip(&space.states) {
            for (o, &k) in out.iter_mut().zip(s) {
                *o += p * k as f64;
            }
        }
        out
    }
}

/// Column-stochastic matrix over configurations; column = source.
#[derive(Clone, Debug)]
pub struct Transition {
    columns: Vec<Vec<(usize, f64)>>,
}

impl Transition {
    pub fn column(&self, from: usize) -> &[(usize, f64)] {
        &self.columns[from]
    }

    pub fn apply(&self, state: &ExactState) -> ExactState {
        let mut out = vec![0.0; state.probs.len()];
        for (col, &p) in self.columns.iter().zip(&state.probs) {
            if p == 0.0 {
                continue;
            }
            for &(to, w) in col {
                out[to] += p * w;
            }
        }
        ExactState { probs: out }
    }
}

/// Exact one-pulse transition matrix implied by the pulse-step law.
pub fn transition_matrix(space: &ConfigSpace, pulse: &PulseRates, emission: &EmissionTable) -> Result<Transition> {
    if pulse.matrix().size() != space.levels() || emission.matrix().size() != space.levels() {
        return Err(Error::invalid("rate matrices do not match the configuration space"));
    }
    let mut columns = Vec::with_capacity(space.len());
    for (i, occ) in space.states.iter().enumerate() {
        let config = Configuration::from_occupations(occ);
        let p = pulse.excitation_probability(&config);
        if p > 1.0 {
            return Err(Error::PerturbativeBound {
                p,
                context: format!("configuration {i} of the exact space"),
            });
        }
        let mut acc: HashMap<usize, f64> = HashMap::new();
        acc.insert(i, 1.0 - p);
        for &m in config.support() {
            let m = m as usize;
            let n_m = occ[m] as f64;
            let (rows, vals) = pulse.matrix().column(m);
            let mut after = config.clone();
            after.remove(m);
            for (&l, &g) in rows.iter().zip(vals) {
                let w = 2.0 * g * n_m;
                for (n, b) in emission.branching(l as usize, &after)? {
                    let mut dest = after.occupations().to_vec();
                    dest[n] += 1;
                    let j = space.index_of(&dest).expect("atom number conserved");
                    *acc.entry(j).or_insert(0.0) += w * b;
                }
            }
        }
        let mut col: Vec<(usize, f64)> = acc.into_iter().filter(|e| e.1 != 0.0).collect();
        col.sort_unstable_by_key(|e| e.0);
        let sum: f64 = col.iter().map(|e| e.1).sum();
        if (sum - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::invalid(format!("transition column {i} sums to {sum}")));
        }
        columns.push(col);
    }
    Ok(Transition { columns })
}

/// Apply every pulse of the schedule to `initial`, cycle by cycle.
pub fn exact_propagate(engine: &Engine, space: &ConfigSpace, initial: &ExactState) -> Result<ExactState> {
    exact_propagate_cycles(engine, space, initial, engine.schedule().total_cycles)
}

/// As [`exact_propagate`] for the first `cycles` cycles.
pub fn exact_propagate_cycles(
    engine: &Engine,
    space: &ConfigSpace,
    initial: &ExactState,
    cycles: usize,
) -> Result<ExactState> {
    if space.levels() != engine.basis().len() {
        return Err(Error::invalid("configuration space does not match the basis"));
    }
    if initial.probs.len() != space.len() {
        return Err(Error::invalid("exact state does not match the configuration space"));
    }
    let ramped = !engine.schedule().ramps.is_empty();
    let mut fixed: Option<Vec<Transition>> = None;
    let mut state = initial.clone();
    for c in 0..cycles {
        let owned;
        let transitions = if ramped {
            owned = build_cycle(engine, space, c)?;
            &owned
        } else {
            if fixed.is_none() {
                fixed = Some(build_cycle(engine, space, c)?);
            }
            fixed.as_ref().expect("just built")
        };
        for t in transitions {
            state = t.apply(&state);
        }
    }
    Ok(state)
}

fn build_cycle(engine: &Engine, space: &ConfigSpace, c: usize) -> Result<Vec<Transition>> {
    engine
        .cycle_rates(c)?
        .iter()
        .map(|r| transition_matrix(space, r, engine.emission()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_elements::{RateKind, RateMatrix};

    #[test]
    fn space_sizes() {
        assert_eq!(ConfigSpace::new(4, 2, 100).unwrap().len(), 10);
        assert_eq!(ConfigSpace::new(6, 2, 100).unwrap().len(), 21);
        assert_eq!(ConfigSpace::new(3, 1, 100).unwrap().len(), 3);
        assert!(matches!(ConfigSpace::new(50, 10, 1000), Err(Error::StateSpace { .. })));
    }

    #[test]
    fn multinomial_marginals() {
        let space = ConfigSpace::new(3, 4, 1000).unwrap();
        let st = ExactState::multinomial(&space, &[0.5, 0.3, 0.2]).unwrap();
        let m = st.mean_occupations(&space);
        for (a, b) in m.iter().zip([2.0, 1.2, 0.8]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_atom_matches_hand_built_three_level_matrix() {
        // Γ^abs: 0→1 (0.1), 0→2 (0.05), 1→1 (0.2); level 2 dark.
        let abs = RateMatrix::from_columns(
            RateKind::Absorption,
            3,
            0,
            vec![vec![(1, 0.1), (2, 0.05)], vec![(1, 0.2)], vec![]],
            0.0,
        )
        .unwrap();
        let sp = RateMatrix::from_columns(
            RateKind::Spontaneous,
            3,
            0,
            vec![vec![(0, 1.0)], vec![(0, 0.25), (1, 0.25), (2, 0.5)], vec![(2, 2.0)]],
            0.0,
        )
        .unwrap();
        let space = ConfigSpace::new(3, 1, 10).unwrap();
        let t = transition_matrix(&space, &PulseRates::new(abs).unwrap(), &EmissionTable::new(sp).unwrap()).unwrap();
        let dense = |from: usize| {
            let mut v = [0.0; 3];
            for &(to, w) in t.column(from) {
                let level = space.occupations(to).iter().position(|&k| k == 1).unwrap();
                v[level] = w;
            }
            v
        };
        let from_level = |l: usize| {
            let mut occ = [0u32; 3];
            occ[l] = 1;
            space.index_of(&occ).unwrap()
        };
        // From 0: p = 0.3; 0→1 then 1→{0:¼,1:¼,2:½}; 0→2 then 2→2.
        let c0 = dense(from_level(0));
        let expect0 = [0.7 + 0.2 * 0.25, 0.2 * 0.25, 0.2 * 0.5 + 0.1];
        for (a, b) in c0.iter().zip(expect0) {
            assert!((a - b).abs() < 1e-15, "{c0:?}");
        }
        let c1 = dense(from_level(1));
        let expect1 = [0.4 * 0.25, 0.6 + 0.4 * 0.25, 0.4 * 0.5];
        for (a, b) in c1.iter().zip(expect1) {
            assert!((a - b).abs() < 1e-15, "{c1:?}");
        }
        assert_eq!(dense(from_level(2)), [0.0, 0.0, 1.0]);
    }
}
