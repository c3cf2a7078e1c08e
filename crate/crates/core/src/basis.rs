//! Truncated isotropic harmonic-trap level basis and occupation-number states.

use std::fmt;

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use crate::error::{Error, Result};

/// Largest supported shell index; keeps per-axis quantum numbers in `u16`.
pub const MAX_SUPPORTED_SHELL: u32 = 200;

/// One trap eigenstate, labelled by its motional quantum numbers.
///
/// Components beyond `dim` are always zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrapLevel {
    q: [u16; 3],
    dim: u8,
}

impl TrapLevel {
    pub fn new(q: &[u16]) -> Result<Self> {
        if q.is_empty() || q.len() > 3 {
            return Err(Error::invalid(format!(
                "trap level must have 1 to 3 components, got {}",
                q.len()
            )));
        }
        let mut arr = [0u16; 3];
        arr[..q.len()].copy_from_slice(q);
        Ok(TrapLevel {
            q: arr,
            dim: q.len() as u8,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn components(&self) -> &[u16] {
        &self.q[..self.dim as usize]
    }

    pub fn axis(&self, j: usize) -> u16 {
        self.q[j]
    }

    /// Total number of trap quanta; the level energy in units of ħω.
    pub fn shell(&self) -> u32 {
        self.components().iter().map(|&c| c as u32).sum()
    }

    /// Copy of this level with axis `j` replaced.
    pub fn with_axis(&self, j: usize, value: u16) -> Self {
        let mut out = *self;
        out.q[j] = value;
        out
    }
}

impl fmt::Debug for TrapLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for TrapLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Shell of a level given as a plain slice.
pub fn shell(level: &[u16]) -> u32 {
    level.iter().map(|&c| c as u32).sum()
}

/// Truncated level basis: every level with shell ≤ `max_shell`, ordered by
/// shell and then lexicographically, so truncation by shell is a prefix of
/// the id space.
#[derive(Clone)]
pub struct Basis {
    dim: usize,
    max_shell: u32,
    levels: Vec<TrapLevel>,
    // Dense lookup over the (max_shell+1)^dim box; u32::MAX marks absent.
    lookup: Vec<u32>,
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis")
            .field("dim", &self.dim)
            .field("max_shell", &self.max_shell)
            .field("len", &self.levels.len())
            .finish()
    }
}

/// Binomial coefficient C(n, k) as u128.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn compositions(dim: usize, total: u32, prefix: &mut Vec<u16>, out: &mut Vec<TrapLevel>) {
    if prefix.len() + 1 == dim {
        prefix.push(total as u16);
        out.push(TrapLevel::new(prefix).expect("dim checked"));
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first as u16);
        compositions(dim, total - first, prefix, out);
        prefix.pop();
    }
}

impl Basis {
    /// Enumerate all levels with shell ≤ `max_shell` in `dim` dimensions.
    pub fn enumerate(dim: usize, max_shell: u32) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if max_shell > MAX_SUPPORTED_SHELL {
            return Err(Error::invalid(format!(
                "max_shell {max_shell} exceeds supported {MAX_SUPPORTED_SHELL}"
            )));
        }
        let mut levels = Vec::with_capacity(binomial(max_shell as u64 + dim as u64, dim as u64) as usize);
        let mut prefix = Vec::with_capacity(dim);
        for s in 0..=max_shell {
            compositions(dim, s, &mut prefix, &mut levels);
        }
        let side = max_shell as usize + 1;
        let mut lookup = vec![u32::MAX; side.pow(dim as u32)];
        let mut basis = Basis {
            dim,
            max_shell,
            levels: Vec::new(),
            lookup: Vec::new(),
        };
        for (id, lvl) in levels.iter().enumerate() {
            lookup[basis.box_index(lvl.components())] = id as u32;
        }
        basis.levels = levels;
        basis.lookup = lookup;
        Ok(basis)
    }

    fn box_index(&self, q: &[u16]) -> usize {
        let side = self.max_shell as usize + 1;
        q.iter().fold(0usize, |acc, &c| acc * side + c as usize)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_shell(&self) -> u32 {
        self.max_shell
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[TrapLevel] {
        &self.levels
    }

    pub fn level(&self, id: usize) -> TrapLevel {
        self.levels[id]
    }

    pub fn shell_of(&self, id: usize) -> u32 {
        self.levels[id].shell()
    }

    /// Dense id of `level`, if it lies inside the truncation.
    pub fn id(&self, level: &TrapLevel) -> Option<usize> {
        self.id_of(level.components())
    }

    pub fn id_of(&self, q: &[u16]) -> Option<usize> {
        if q.len() != self.dim || q.iter().any(|&c| c as u32 > self.max_shell) {
            return None;
        }
        match self.lookup[self.box_index(q)] {
            u32::MAX => None,
            id => Some(id as usize),
        }
    }

    /// Number of levels in a given shell, C(s + dim − 1, dim − 1).
    pub fn shell_degeneracy(&self, s: u32) -> u128 {
        binomial(s as u64 + self.dim as u64 - 1, self.dim as u64 - 1)
    }

    /// Parse a level and check it lies inside the basis.
    pub fn require(&self, q: &[u16]) -> Result<usize> {
        self.id_of(q).ok_or_else(|| {
            Error::invalid(format!(
                "level {q:?} is outside the basis (dim {}, max_shell {})",
                self.dim, self.max_shell
            ))
        })
    }
}

/// Thermal distribution p(m) ∝ exp(−β·shell(m)) over a truncated basis.
#[derive(Clone, Debug)]
pub struct ThermalDistribution {
    pub beta: f64,
    pub probs: Vec<f64>,
}

fn shell_moments(basis: &Basis, beta: f64) -> (f64, f64) {
    let mut z = 0.0;
    let mut e = 0.0;
    for s in 0..=basis.max_shell() {
        let w = basis.shell_degeneracy(s) as f64 * (-beta * s as f64).exp();
        z += w;
        e += w * s as f64;
    }
    (z, e / z)
}

impl ThermalDistribution {
    /// Solve for β so that the mean shell of the truncated distribution equals
    /// `mean_shell`. Only non-negative temperatures are accepted, so the
    /// largest attainable mean is the uniform (β = 0) mean of the basis.
    pub fn new(basis: &Basis, mean_shell: f64) -> Result<Self> {
        if !(mean_shell > 0.0) || !mean_shell.is_finite() {
            return Err(Error::invalid(format!("mean_shell must be > 0, got {mean_shell}")));
        }
        let (_, uniform_mean) = shell_moments(basis, 0.0);
        let beta = if (mean_shell - uniform_mean).abs() <= 1e-12 * uniform_mean.max(1.0) {
            0.0
        } else if mean_shell > uniform_mean {
            return Err(Error::invalid(format!(
                "mean_shell {mean_shell} not attainable: truncated basis supports at most {uniform_mean:.6}"
            )));
        } else {
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            while shell_moments(basis, hi).1 > mean_shell {
                lo = hi;
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(Error::invalid(format!("mean_shell {mean_shell} too small to resolve")));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if shell_moments(basis, mid).1 > mean_shell {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let (z, _) = shell_moments(basis, beta);
        let probs = basis
            .levels()
            .iter()
            .map(|l| (-beta * l.shell() as f64).exp() / z)
            .collect();
        Ok(ThermalDistribution { beta, probs })
    }

    pub fn mean_shell(&self, basis: &Basis) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * basis.shell_of(i) as f64)
            .sum()
    }
}

/// Occupation numbers over the basis. Tracks the set of occupied levels so
/// that per-pulse sums cost O(occupied) instead of O(levels).
#[derive(Clone, Debug)]
pub struct Configuration {
    occ: Vec<u32>,
    support: Vec<u32>,
    slot: Vec<u32>,
    atoms: u32,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.occ == other.occ
    }
}

impl Eq for Configuration {}

impl Configuration {
    pub fn empty(levels: usize) -> Self {
        Configuration {
            occ: vec![0; levels],
            support: Vec::new(),
            slot: vec![u32::MAX; levels],
            atoms: 0,
        }
    }

    pub fn from_occupations(occ: &[u32]) -> Self {
        let mut c = Self::empty(occ.len());
        for (id, &n) in occ.iter().enumerate() {
            for _ in 0..n {
                c.add(id);
            }
        }
        c
    }

    /// All `atoms` atoms in level `id`.
    pub fn point(levels: usize, id: usize, atoms: u32) -> Self {
        let mut occ = vec![0; levels];
        occ[id] = atoms;
        Self::from_occupations(&occ)
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occ
    }

    pub fn get(&self, id: usize) -> u32 {
        self.occ[id]
    }

    pub fn atoms(&self) -> u32 {
        self.atoms
    }

    pub fn levels(&self) -> usize {
        self.occ.len()
    }

    /// Occupied level ids, in an order determined by the history of moves.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn add(&mut self, id: usize) {
        if self.occ[id] == 0 {
            self.slot[id] = self.support.len() as u32;
            self.support.push(id as u32);
        }
        self.occ[id] += 1;
        self.atoms += 1;
    }

    /// Remove one atom from `id`. Panics if the level is empty.
    pub fn remove(&mut self, id: usize) {
        assert!(self.occ[id] > 0, "remove from empty level {id}");
        self.occ[id] -= 1;
        self.atoms -= 1;
        if self.occ[id] == 0 {
            let s = self.slot[id] as usize;
            self.support.swap_remove(s);
            if s < self.support.len() {
                self.slot[self.support[s] as usize] = s as u32;
            }
            self.slot[id] = u32::MAX;
        }
    }

    pub fn mean_shell(&self, basis: &Basis) -> f64 {
        if self.atoms == 0 {
            return 0.0;
        }
        let tot: u64 = self
            .support
            .iter()
            .map(|&id| self.occ[id as usize] as u64 * basis.shell_of(id as usize) as u64)
            .sum();
        tot as f64 / self.atoms as f64
    }
}

/// Draw `atoms` independent levels from `probs`.
pub fn sample_initial_configuration<R: Rng + ?Sized>(probs: &[f64], atoms: u32, rng: &mut R) -> Result<Configuration> {
    if atoms == 0 {
        return Err(Error::invalid("atom number must be ≥ 1"));
    }
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::invalid(format!("initial distribution is not a valid weight vector: {e}")))?;
    let mut c = Configuration::empty(probs.len());
    for _ in 0..atoms {
        c.add(dist.sample(rng));
    }
    Ok(c)
}
