//! Run configuration: one TOML file describes one reproducible run.

use std::path::PathBuf;

use lasercond::analysis::CycleTiming;
use lasercond::basis::{Basis, TrapLevel};
use lasercond::dynamics::AUTO_TARGET_P;
use lasercond::matrix_elements::EmissionPattern;
use lasercond::params::{SimParams, DEFAULT_OMEGA0_TAU_ABS, DEFAULT_OMEGA_TAU_ABS};
use lasercond::schedule::{figure_schedule, hysteresis_schedule, Figure, Ramp};
use lasercond::{PulseSpec, Schedule};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub atoms: u32,
    pub trajectories: usize,
    pub basis: BasisConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub initial: InitialConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub recorder: RecorderConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub cache: CacheConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub dim: usize,
    pub max_shell: u32,
}

/// Pulse area Ω₀τ_abs: a number, or `"auto"` for per-pulse calibration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Area {
    Auto,
    Fixed(f64),
}

impl Serialize for Area {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Area::Auto => s.serialize_str("auto"),
            Area::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Area {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Area::Fixed(v)),
            Raw::Text(t) if t == "auto" => Ok(Area::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "omega0_tau_abs must be a number or \"auto\", got {t:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub eta: f64,
    pub gamma: f64,
    pub omega_tau_abs: f64,
    pub omega0_tau_abs: Area,
    pub eta_sp_ratio: f64,
    pub emission: EmissionPattern,
    pub quadrature_order: usize,
    /// Atom number whose mean initial occupations set the auto areas
    /// (defaults to `atoms`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration_atoms: Option<u32>,
    /// Excitation probability per pulse aimed for by auto calibration.
    pub target_excitation: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            eta: 2.0,
            gamma: 0.01,
            omega_tau_abs: DEFAULT_OMEGA_TAU_ABS,
            omega0_tau_abs: Area::Auto,
            eta_sp_ratio: 1.0,
            emission: EmissionPattern::Isotropic,
            quadrature_order: 24,
            calibration_atoms: None,
            target_excitation: AUTO_TARGET_P,
        }
    }
}

impl ParamsConfig {
    /// Physical parameters; under auto areas the placeholder area is used
    /// until calibration.
    pub fn sim_params(&self) -> SimParams {
        SimParams {
            eta: self.eta,
            gamma: self.gamma,
            omega_tau_abs: self.omega_tau_abs,
            omega0_tau_abs: match self.omega0_tau_abs {
                Area::Auto => DEFAULT_OMEGA0_TAU_ABS,
                Area::Fixed(v) => v,
            },
            eta_sp_ratio: self.eta_sp_ratio,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialConfig {
    /// Atoms drawn independently from a thermal distribution.
    Thermal { mean_shell: f64 },
    /// All atoms in one level.
    Point { level: Vec<u16> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub s: i32,
    pub amplitudes: Vec<f64>,
}

/// Exactly one of `figure` or `pulses`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<Figure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulses: Option<Vec<PulseConfig>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ramps: Vec<Ramp>,
    /// Overrides the preset length; required for explicit pulse lists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_cycles: Option<usize>,
    /// Hold length of the fig3 preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hold_cycles: Option<usize>,
    /// Length of each fig3 ramp.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp_cycles: Option<usize>,
    /// Pulse indices dropped from the cycle.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecorderConfig {
    pub stride: usize,
    /// Watched levels; empty means the ground level only.
    pub watched: Vec<Vec<u16>>,
    /// Log emission events of trajectory 0.
    pub events: bool,
}

impl Default for RecorderConfig {
    fn default() -> Self {
        RecorderConfig {
            stride: 10,
            watched: Vec::new(),
            events: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheConfig {
    /// Rate-matrix cache directory; caching is off when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Target level of the condensation criterion; ground when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<u16>>,
    pub dark_tolerance: f64,
    pub threshold: f64,
    /// Levels whose summed population is tracked on the first ramp;
    /// ground when empty.
    pub up_source: Vec<Vec<u16>>,
    /// Levels tracked on the second ramp; (1,0,1) and (0,1,1) when empty.
    pub down_source: Vec<Vec<u16>>,
    pub timing: CycleTiming,
    pub trap_hz: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            target: None,
            dark_tolerance: 1e-9,
            threshold: 0.5,
            up_source: Vec::new(),
            down_source: Vec::new(),
            timing: CycleTiming::default(),
            trap_hz: 1e4,
        }
    }
}

pub const CACHE_DIR_ENV: &str = "LASERCOND_CACHE_DIR";

impl RunConfig {
    /// Parse and validate.
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.atoms == 0 {
            return Err(CliError::Config("atoms must be ≥ 1".into()));
        }
        if self.trajectories == 0 {
            return Err(CliError::Config("trajectories must be ≥ 1".into()));
        }
        if self.recorder.stride == 0 {
            return Err(CliError::Config("recorder.stride must be ≥ 1".into()));
        }
        let t = self.params.target_excitation;
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::Config(format!(
                "params.target_excitation must lie in (0, 1], got {t}"
            )));
        }
        let thr = self.analysis.threshold;
        if !(thr > 0.0 && thr < 1.0) {
            return Err(CliError::Config(format!(
                "analysis.threshold must lie in (0, 1), got {thr}"
            )));
        }
        if self.params.calibration_atoms == Some(0) {
            return Err(CliError::Config("params.calibration_atoms must be ≥ 1".into()));
        }
        self.params.sim_params().validate()?;
        let basis = self.basis()?;
        self.schedule(&self.params.sim_params())?;
        if let InitialConfig::Thermal { mean_shell } = self.initial {
            if !(mean_shell >= 0.0) {
                return Err(CliError::Config(format!(
                    "initial.mean_shell must be ≥ 0, got {mean_shell}"
                )));
            }
        }
        self.levels(&basis)?;
        Ok(())
    }

    pub fn basis(&self) -> Result<Basis, CliError> {
        Ok(Basis::enumerate(self.basis.dim, self.basis.max_shell)?)
    }

    /// The unresolved schedule (areas not yet calibrated).
    pub fn schedule(&self, params: &SimParams) -> Result<Schedule, CliError> {
        let sc = &self.schedule;
        let mut sched = match (&sc.figure, &sc.pulses) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "schedule: give either figure or pulses, not both".into(),
                ))
            }
            (None, None) => return Err(CliError::Config("schedule: give figure or pulses".into())),
            (Some(fig), None) => {
                if !sc.ramps.is_empty() {
                    return Err(CliError::Config(
                        "schedule: ramps cannot be added to a figure preset".into(),
                    ));
                }
                if self.basis.dim != 3 {
                    return Err(CliError::Config("figure presets need a 3D basis".into()));
                }
                let s = match (fig, sc.hold_cycles, sc.ramp_cycles) {
                    (Figure::Fig3, hold, ramp) => hysteresis_schedule(
                        hold.unwrap_or(lasercond::schedule::FIG3_HOLD_CYCLES),
                        ramp.unwrap_or(lasercond::schedule::FIG3_RAMP_CYCLES),
                        params,
                    ),
                    (f, None, None) => figure_schedule(*f, params),
                    _ => {
                        return Err(CliError::Config(
                            "hold_cycles and ramp_cycles apply to fig3 only".into(),
                        ))
                    }
                };
                match sc.total_cycles {
                    Some(t) => s.with_total_cycles(t),
                    None => s,
                }
            }
            (None, Some(pulses)) => {
                if sc.hold_cycles.is_some() || sc.ramp_cycles.is_some() {
                    return Err(CliError::Config(
                        "hold_cycles and ramp_cycles apply to fig3 only".into(),
                    ));
                }
                let total = sc
                    .total_cycles
                    .ok_or_else(|| CliError::Config("schedule.total_cycles is required with explicit pulses".into()))?;
                let cycle = pulses
                    .iter()
                    .map(|p| {
                        PulseSpec::new(p.s, p.amplitudes.clone())
                            .with_shape(params.omega0_tau_abs, params.omega_tau_abs)
                    })
                    .collect();
                Schedule {
                    cycle,
                    ramps: sc.ramps.clone(),
                    total_cycles: total,
                }
            }
        };
        if !sc.exclude.is_empty() {
            sched = exclude_pulses(sched, &sc.exclude)?;
        }
        sched.validate(self.basis.dim)?;
        Ok(sched)
    }

    /// Resolved level ids of every level the configuration names.
    pub fn levels(&self, basis: &Basis) -> Result<Levels, CliError> {
        let ground = vec![0u16; basis.dim()];
        let id = |q: &[u16], what: &str| -> Result<usize, CliError> {
            basis
                .id_of(q)
                .ok_or_else(|| CliError::Config(format!("{what} level {q:?} outside basis")))
        };
        let ids = |qs: &[Vec<u16>], what: &str| qs.iter().map(|q| id(q, what)).collect::<Result<Vec<_>, _>>();
        let watched = if self.recorder.watched.is_empty() {
            vec![0]
        } else {
            ids(&self.recorder.watched, "watched")?
        };
        let target = id(self.analysis.target.as_deref().unwrap_or(&ground), "target")?;
        let up_source = if self.analysis.up_source.is_empty() {
            vec![0]
        } else {
            ids(&self.analysis.up_source, "up_source")?
        };
        let down_source = if !self.analysis.down_source.is_empty() {
            Some(ids(&self.analysis.down_source, "down_source")?)
        } else if basis.dim() == 3 {
            Some(ids(&[vec![1, 0, 1], vec![0, 1, 1]], "down_source")?)
        } else {
            None
        };
        let initial_point = match &self.initial {
            InitialConfig::Point { level } => Some(id(level, "initial")?),
            InitialConfig::Thermal { .. } => None,
        };
        Ok(Levels {
            watched,
            target,
            up_source,
            down_source,
            initial_point,
        })
    }

    /// Cache directory, with the environment override taking precedence.
    pub fn cache_dir(&self) -> Option<PathBuf> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
            _ => self.cache.dir.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Levels {
    pub watched: Vec<usize>,
    pub target: usize,
    pub up_source: Vec<usize>,
    pub down_source: Option<Vec<usize>>,
    pub initial_point: Option<usize>,
}

fn exclude_pulses(mut sched: Schedule, exclude: &[usize]) -> Result<Schedule, CliError> {
    let n = sched.cycle.len();
    if let Some(&i) = exclude.iter().find(|&&i| i >= n) {
        return Err(CliError::Config(format!(
            "schedule.exclude: no pulse {i} in a cycle of {n}"
        )));
    }
    if sched.ramps.iter().any(|r| exclude.contains(&r.pulse)) {
        return Err(CliError::Config("schedule.exclude removes a ramped pulse".into()));
    }
    let new_index: Vec<Option<usize>> = {
        let mut k = 0;
        (0..n)
            .map(|i| {
                (!exclude.contains(&i)).then(|| {
                    k += 1;
                    k - 1
                })
            })
            .collect()
    };
    for r in &mut sched.ramps {
        r.pulse = new_index[r.pulse].expect("ramped pulses are kept");
    }
    sched.cycle = sched
        .cycle
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !exclude.contains(i))
        .map(|(_, p)| p)
        .collect();
    Ok(sched)
}

/// "(n_x,n_y,n_z)" label.
pub fn level_label(level: &TrapLevel) -> String {
    let parts: Vec<String> = level.components().iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(","))
}
