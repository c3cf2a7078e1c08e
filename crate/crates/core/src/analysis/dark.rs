use crate::basis::{Basis, TrapLevel};
use crate::error::{Error, Result};
use crate::matrix_elements::{AbsorptionBuilder, PulseSpec, RateMatrix};
use crate::params::SimParams;

/// Per-level total depletion Γ_m = Σ_l Γ^abs_{lm}, summed over pulses.
#[derive(Clone, Debug, PartialEq)]
pub struct DepletionProfile {
    pub per_level: Vec<f64>,
}

impl DepletionProfile {
    pub fn from_matrices<'m>(matrices: impl IntoIterator<Item = &'m RateMatrix>) -> Result<Self> {
        let mut per_level: Option<Vec<f64>> = None;
        for m in matrices {
            let acc = per_level.get_or_insert_with(|| vec![0.0; m.size()]);
            if acc.len() != m.size() {
                return Err(Error::invalid("absorption matrices of different sizes"));
            }
            for (a, s) in acc.iter_mut().zip(m.column_sums()) {
                *a += s;
            }
        }
        per_level
            .map(|per_level| DepletionProfile { per_level })
            .ok_or_else(|| Error::invalid("pulse list is empty"))
    }

    pub fn max(&self) -> f64 {
        self.per_level.iter().copied().fold(0.0, f64::max)
    }
}

pub fn depletion_profile(pulses: &[PulseSpec], basis: &Basis, params: &SimParams) -> Result<DepletionProfile> {
    if pulses.is_empty() {
        return Err(Error::invalid("pulse list is empty"));
    }
    let builder = AbsorptionBuilder::new(basis, params)?;
    let mats = pulses.iter().map(|p| builder.build(p)).collect::<Result<Vec<_>>>()?;
    DepletionProfile::from_matrices(&mats)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DarkState {
    pub id: usize,
    pub level: TrapLevel,
    pub depletion: f64,
}

/// Levels with Γ_m < tol·max Γ, sorted by depletion then id.
pub fn dark_states_of(profile: &DepletionProfile, basis: &Basis, tol: f64) -> Result<Vec<DarkState>> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    if profile.per_level.len() != basis.len() {
        return Err(Error::invalid("depletion profile does not match the basis"));
    }
    let cut = tol * profile.max();
    let mut out: Vec<DarkState> = profile
        .per_level
        .iter()
        .enumerate()
        .filter(|(_, &g)| g < cut || g == 0.0)
        .map(|(id, &g)| DarkState {
            id,
            level: basis.level(id),
            depletion: g,
        })
        .collect();
    out.sort_by(|a, b| a.depletion.total_cmp(&b.depletion).then(a.id.cmp(&b.id)));
    Ok(out)
}

pub fn find_dark_states(pulses: &[PulseSpec], basis: &Basis, params: &SimParams, tol: f64) -> Result<Vec<DarkState>> {
    dark_states_of(&depletion_profile(pulses, basis, params)?, basis, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{figure_schedule, sideband_pulse, Figure};

    fn basis() -> Basis {
        Basis::enumerate(3, 10).unwrap()
    }

    #[test]
    fn sideband_leaves_ground_dark() {
        let b = basis();
        let prof = depletion_profile(&[sideband_pulse(-1, None, 3)], &b, &SimParams::with_eta(2.0)).unwrap();
        assert_eq!(prof.per_level[b.id_of(&[0, 0, 0]).unwrap()], 0.0);
    }

    #[test]
    fn fig1_cycle_keeps_ground_dark() {
        let b = basis();
        let p = SimParams::with_eta(2.0);
        let sched = figure_schedule(Figure::Fig1, &p);
        let prof = depletion_profile(&sched.cycle, &b, &p).unwrap();
        assert!(prof.per_level[0] <= 1e-12 * prof.max());
    }

    #[test]
    fn laguerre_zero_darkens_111() {
        let b = basis();
        let prof = depletion_profile(&[sideband_pulse(3, None, 3)], &b, &SimParams::with_eta(2.0)).unwrap();
        assert!(prof.per_level[b.id_of(&[1, 1, 1]).unwrap()] <= 1e-12 * prof.max());
    }

    #[test]
    fn interference_pulses() {
        let b = basis();
        let p = SimParams::with_eta(2.0);
        let dark = find_dark_states(&[PulseSpec::new(0, vec![1.0, 1.0, -2.0])], &b, &p, 1e-9).unwrap();
        for m in 0..=3u16 {
            assert!(dark.iter().any(|d| d.level.components() == [m, m, m]), "({m},{m},{m})");
        }
        let dark = find_dark_states(&[PulseSpec::new(0, vec![1.0, 1.0, -2.0 / 3.0])], &b, &p, 1e-9).unwrap();
        for q in [[1, 0, 1], [0, 1, 1]] {
            assert!(dark.iter().any(|d| d.level.components() == q));
        }
    }

    #[test]
    fn additive_and_quadratic_in_area() {
        let b = Basis::enumerate(3, 6).unwrap();
        let p = SimParams::with_eta(2.0);
        let a = sideband_pulse(-1, None, 3);
        let c = PulseSpec::new(0, vec![1.0, 1.0, -2.0]);
        let both = depletion_profile(&[a.clone(), c.clone()], &b, &p).unwrap();
        let pa = depletion_profile(std::slice::from_ref(&a), &b, &p).unwrap();
        let pc = depletion_profile(&[c], &b, &p).unwrap();
        let a3 = depletion_profile(&[a.with_shape(0.3, 8.0)], &b, &p).unwrap();
        for i in 0..b.len() {
            assert!((both.per_level[i] - pa.per_level[i] - pc.per_level[i]).abs() <= 1e-15 * both.max());
            assert!((a3.per_level[i] - 9.0 * pa.per_level[i]).abs() <= 1e-13 * a3.max());
        }
    }

    #[test]
    fn dark_set_is_scale_invariant() {
        let b = Basis::enumerate(3, 6).unwrap();
        let p = SimParams::with_eta(2.0);
        let pulses = [
            PulseSpec::new(0, vec![1.0, 1.0, -2.0 / 3.0]),
            sideband_pulse(-1, None, 3),
        ];
        let scaled: Vec<PulseSpec> = pulses.iter().map(|q| q.clone().with_shape(0.5, 8.0)).collect();
        let ids = |v: Vec<DarkState>| v.into_iter().map(|d| d.id).collect::<Vec<_>>();
        assert_eq!(
            ids(find_dark_states(&pulses, &b, &p, 1e-3).unwrap()),
            ids(find_dark_states(&scaled, &b, &p, 1e-3).unwrap())
        );
    }

    #[test]
    fn bad_tolerance_and_empty_list() {
        let b = basis();
        let p = SimParams::with_eta(2.0);
        assert!(find_dark_states(&[sideband_pulse(-1, None, 3)], &b, &p, 1.0).is_err());
        assert!(depletion_profile(&[], &b, &p).is_err());
    }
}
