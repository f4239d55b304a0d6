use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fieldlab::GridSpec;
use crate::pressure::PressureLaw;
use crate::synth::VacuumKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Rates,
    Vacuum,
    Counterexample,
    Budget,
    Qns,
    Boundary,
    Ns,
}

impl StudyKind {
    pub const ALL: [StudyKind; 7] = [
        StudyKind::Rates,
        StudyKind::Vacuum,
        StudyKind::Counterexample,
        StudyKind::Budget,
        StudyKind::Qns,
        StudyKind::Boundary,
        StudyKind::Ns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Rates => "rates",
            StudyKind::Vacuum => "vacuum",
            StudyKind::Counterexample => "counterexample",
            StudyKind::Budget => "budget",
            StudyKind::Qns => "qns",
            StudyKind::Boundary => "boundary",
            StudyKind::Ns => "ns",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Periodic space, no time axis.
    Stationary,
    /// Bounded time axis first, periodic space.
    SpaceTime,
    /// Bounded time and a bounded 1D spatial interval.
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub kind: GridKind,
    /// Node counts, time first when present.
    pub points: Vec<usize>,
    /// Axis lengths in the same order.
    pub extents: Vec<f64>,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        if self.points.len() != self.extents.len() {
            return Err(LabError::Config("grid.points and grid.extents differ in length".into()));
        }
        match self.kind {
            GridKind::Stationary => GridSpec::stationary(&self.points, &self.extents),
            GridKind::SpaceTime => GridSpec::space_time(&self.points, &self.extents),
            GridKind::Interval => {
                if self.points.len() != 2 {
                    return Err(LabError::Config("interval grids take [time, space] points".into()));
                }
                GridSpec::interval(self.points[0], self.extents[0], self.points[1], self.extents[1])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub gamma: f64,
    pub kappa: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub nu: f64,
}

impl LawConfig {
    pub fn law(&self) -> Result<PressureLaw> {
        PressureLaw::new(self.gamma, self.kappa)
    }
}

/// Field generators. Velocity-carrying studies pair a density generator with a velocity one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Weierstrass { alpha: f64, levels: u32, base_frequency: u32, floor: f64, seed_offset: u64 },
    VacuumProfile { profile: VacuumKind, m: f64 },
    Counterexample { i_max: u32 },
    Spike { width: f64 },
    Constant { value: Vec<f64> },
    SimpleWave { amplitude: f64 },
    Riemann { rho_l: f64, u_l: f64, rho_r: f64, u_r: f64 },
    Acoustic { amplitude: f64, boundary_velocity: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladders {
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub radius: Vec<f64>,
    /// Spike indices for the counterexample.
    #[serde(default)]
    pub i: Vec<u32>,
}

/// Study parameters; every field is echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Exponent `r` of the reciprocal-integrability check (skipped when 0).
    #[serde(default)]
    pub r: f64,
    #[serde(default = "default_one")]
    pub qns_constant: f64,
    #[serde(default = "default_one")]
    pub qns_m: f64,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    /// Region `[a, b]` as fractions of the first spatial axis.
    #[serde(default = "default_region")]
    pub region: [f64; 2],
    #[serde(default)]
    pub t1: f64,
    #[serde(default)]
    pub t2: f64,
    #[serde(default)]
    pub degenerate: bool,
    /// Radius of the centred test function as a fraction of the smallest extent.
    #[serde(default = "default_phi")]
    pub phi_fraction: f64,
}

fn default_beta() -> f64 {
    0.5
}
fn default_q() -> f64 {
    3.0
}
fn default_p() -> f64 {
    2.0
}
fn default_one() -> f64 {
    1.0
}
fn default_eps0() -> f64 {
    crate::vacuum::DEFAULT_EPS0
}
fn default_region() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_phi() -> f64 {
    0.3
}

impl Default for Params {
    fn default() -> Self {
        toml::from_str("").expect("empty params table")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed shortfall of a fitted exponent below its expected value.
    #[serde(default = "default_rate_tol")]
    pub rate: f64,
    #[serde(default = "default_r2")]
    pub r_squared: f64,
    /// Absolute tolerance on identity gaps and boundary velocities.
    #[serde(default = "default_gap")]
    pub gap: f64,
}

fn default_rate_tol() -> f64 {
    0.1
}
fn default_r2() -> f64 {
    0.95
}
fn default_gap() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rate: default_rate_tol(), r_squared: default_r2(), gap: default_gap() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: StudyKind,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses the default pool.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub grid: GridConfig,
    pub law: LawConfig,
    pub density: GeneratorConfig,
    #[serde(default)]
    pub velocity: Option<GeneratorConfig>,
    #[serde(default)]
    pub ladders: Ladders,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Parses TOML; syntax and schema errors carry the line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Checks every referenced parameter before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LabError::Config(m.to_string()));
        self.grid.build()?;
        self.law.law()?;
        if self.law.mu < 0.0 || self.law.nu < 0.0 {
            return bad("law.mu and law.nu must be non-negative");
        }
        let l = &self.ladders;
        let p = &self.params;
        match self.study {
            StudyKind::Rates | StudyKind::Vacuum | StudyKind::Budget | StudyKind::Ns if l.eps.len() < 4 => {
                bad("ladders.eps needs at least four entries")
            }
            StudyKind::Counterexample if l.i.len() < 2 => bad("ladders.i needs at least two spike indices"),
            StudyKind::Counterexample if !matches!(self.density, GeneratorConfig::Counterexample { .. }) => {
                bad("the counterexample study needs a counterexample density")
            }
            StudyKind::Counterexample
                if self.grid.kind != GridKind::Stationary || self.grid.extents != [crate::vacuum::SPIKE_PERIOD] =>
            {
                bad("the counterexample needs a stationary grid with extents = [2.0]")
            }
            StudyKind::Qns if l.eps.is_empty() || l.radius.is_empty() => {
                bad("ladders.eps and ladders.radius must be non-empty")
            }
            StudyKind::Boundary if l.delta.len() < 4 || l.nu.is_empty() => {
                bad("ladders.delta needs four entries and ladders.nu one")
            }
            StudyKind::Boundary if !(p.t2 > p.t1) => bad("params.t2 must exceed params.t1"),
            StudyKind::Budget | StudyKind::Ns | StudyKind::Boundary
                if self.velocity.is_none() && !self.density.carries_velocity() =>
            {
                bad("this study needs a velocity generator")
            }
            _ => Ok(()),
        }?;
        if !(p.beta > 0.0 && p.beta <= 1.0) || p.q < 1.0 || p.p < 1.0 {
            return bad("params: need 0 < beta <= 1, q >= 1, p >= 1");
        }
        if l.eps.iter().chain(&l.delta).chain(&l.nu).chain(&l.radius).any(|v| !(*v > 0.0)) {
            return bad("ladder entries must be positive");
        }
        Ok(())
    }
}

impl GeneratorConfig {
    /// Generators that produce a full `(ρ, u)` state.
    pub fn carries_velocity(&self) -> bool {
        matches!(
            self,
            GeneratorConfig::SimpleWave { .. } | GeneratorConfig::Riemann { .. } | GeneratorConfig::Acoustic { .. }
        )
    }
}
