//! Declarative experiment configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Branch;
use crate::value::{ConvergenceOptions, CostField, GridSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    JunctionBehavior,
    Zeno,
    ScalingLaw,
    Tracking,
    Counterexample,
    ValueConvergence,
    AprioriSuite,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::JunctionBehavior,
        Scenario::Zeno,
        Scenario::ScalingLaw,
        Scenario::Tracking,
        Scenario::Counterexample,
        Scenario::ValueConvergence,
        Scenario::AprioriSuite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::JunctionBehavior => "junction-behavior",
            Scenario::Zeno => "zeno",
            Scenario::ScalingLaw => "scaling-law",
            Scenario::Tracking => "tracking",
            Scenario::Counterexample => "counterexample",
            Scenario::ValueConvergence => "value-convergence",
            Scenario::AprioriSuite => "apriori-suite",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Integrator tolerances shared by the trajectory scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JunctionParams {
    pub eps: f64,
    pub horizon: f64,
    /// Angles `2πj/angles` tried from each start.
    pub angles: usize,
    /// State errors must stay below `error_factor · ε^(1/3)`.
    pub error_factor: f64,
    pub eta_eps: Vec<f64>,
    /// Angles strictly inside `(π, 3π/2)` for the first-crossing abscissa.
    pub eta_angles: usize,
    pub witness_times: Vec<f64>,
    /// Starts `e_N / n` for `n = 1..=instability_starts`.
    pub instability_starts: usize,
    pub tolerances: Tolerances,
}

impl Default for JunctionParams {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            horizon: 4.0,
            angles: 16,
            error_factor: 10.0,
            eta_eps: vec![1e-3, 1e-4, 1e-5],
            eta_angles: 5,
            witness_times: vec![0.0, 0.5, 1.0, 2.0],
            instability_starts: 5,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZenoParams {
    pub depth: usize,
    pub cycle: Vec<Branch>,
    pub eps: Vec<f64>,
    pub tolerances: Tolerances,
}

impl Default for ZenoParams {
    fn default() -> Self {
        Self {
            depth: 10,
            cycle: Branch::EDGES.to_vec(),
            eps: vec![1e-2, 1e-3],
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingParams {
    pub samples: usize,
    pub eps: f64,
    pub horizon: f64,
    pub rhos: Vec<f64>,
    /// Starting points are drawn from `[−box_half, box_half]²`.
    pub box_half: f64,
    /// Matched samples per unit time.
    pub samples_per_unit: usize,
    /// Discrepancies must stay below `factor · rel_tol`.
    pub factor: f64,
    pub tolerances: Tolerances,
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self {
            samples: 20,
            eps: 1e-2,
            horizon: 1.0,
            rhos: vec![0.5, 2.0],
            box_half: 2.0,
            samples_per_unit: 64,
            factor: 10.0,
            tolerances: Tolerances::default(),
        }
    }
}

/// Random piecewise-constant controls with `pieces` pieces of equal length on the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomControls {
    pub samples: usize,
    pub pieces: usize,
    pub f_inf: f64,
    pub box_half: f64,
}

impl Default for RandomControls {
    fn default() -> Self {
        Self {
            samples: 10,
            pieces: 4,
            f_inf: 1.0,
            box_half: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingParams {
    pub gamma: f64,
    pub eps: Vec<f64>,
    pub horizon: f64,
    pub speed_tol: f64,
    pub random: RandomControls,
    pub tolerances: Tolerances,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            eps: vec![1e-2, 1e-3, 1e-4],
            horizon: 1.0,
            speed_tol: 1e-6,
            random: RandomControls::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleParams {
    pub lambda: f64,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
    pub quadrature_tol: f64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            sweep_min: 0.1,
            sweep_max: 10.0,
            sweep_points: 100,
            quadrature_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueParams {
    pub lambda: f64,
    pub cost: CostField,
    pub eps: Vec<f64>,
    pub grid: GridSpec,
    pub study: ConvergenceOptions,
    /// Largest accepted `max / min` of the per-ε Lipschitz constants on the axes.
    pub lipschitz_spread: f64,
}

impl Default for ValueParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            cost: CostField::CappedNorm { cap: 2.0 },
            eps: vec![0.2, 0.1, 0.05],
            grid: GridSpec::default(),
            study: ConvergenceOptions::default(),
            lipschitz_spread: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AprioriParams {
    /// ε values for the invariance and a priori checks.
    pub eps: Vec<f64>,
    pub horizon: f64,
    /// Relative slack on the invariant level `κ ε^(4/3)`.
    pub invariance_slack: f64,
    pub gamma: f64,
    /// ε ladder for the entry-time bounds.
    pub entry_eps: Vec<f64>,
    /// Fixed level `λ` for the `C ε / λ` entry bound.
    pub entry_level: f64,
    /// Largest accepted `max / min` of the fitted entry constants.
    pub entry_spread: f64,
    pub random: RandomControls,
    pub tolerances: Tolerances,
}

impl Default for AprioriParams {
    fn default() -> Self {
        Self {
            eps: vec![1e-2, 1e-3],
            horizon: 1.0,
            invariance_slack: 1e-6,
            gamma: 0.5,
            entry_eps: vec![1e-2, 1e-3, 1e-4],
            entry_level: 1e-2,
            entry_spread: 2.0,
            random: RandomControls {
                samples: 50,
                pieces: 4,
                f_inf: 1.0,
                box_half: 2.0,
            },
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub junction: JunctionParams,
    #[serde(default)]
    pub zeno: ZenoParams,
    #[serde(default)]
    pub scaling: ScalingParams,
    #[serde(default)]
    pub tracking: TrackingParams,
    #[serde(default)]
    pub counterexample: CounterexampleParams,
    #[serde(default)]
    pub value: ValueParams,
    #[serde(default)]
    pub apriori: AprioriParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("artifacts")
}

fn default_seed() -> u64 {
    7
}

impl ExperimentConfig {
    /// Defaults for every section.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            output_dir: default_output_dir(),
            parallel: false,
            seed: default_seed(),
            junction: JunctionParams::default(),
            zeno: ZenoParams::default(),
            scaling: ScalingParams::default(),
            tracking: TrackingParams::default(),
            counterexample: CounterexampleParams::default(),
            value: ValueParams::default(),
            apriori: AprioriParams::default(),
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks the section used by `scenario`.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match self.scenario {
            Scenario::JunctionBehavior => {
                let p = &self.junction;
                check_eps(&[p.eps])?;
                check_eps(&p.eta_eps)?;
                check_pos("junction.horizon", p.horizon)?;
                check_pos("junction.error_factor", p.error_factor)?;
                check_count("junction.angles", p.angles)?;
                if p.witness_times.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
                    return Err(Error::Config("junction.witness_times must be nonnegative".into()));
                }
                check_tol(&p.tolerances)
            }
            Scenario::Zeno => {
                let p = &self.zeno;
                if !(1..=60).contains(&p.depth) {
                    return Err(Error::Config("zeno.depth must lie in 1..=60".into()));
                }
                if p.cycle.is_empty() || p.cycle.contains(&Branch::O) {
                    return Err(Error::Config("zeno.cycle must list edge branches".into()));
                }
                check_eps(&p.eps)?;
                check_tol(&p.tolerances)
            }
            Scenario::ScalingLaw => {
                let p = &self.scaling;
                check_eps(&[p.eps])?;
                check_pos("scaling.horizon", p.horizon)?;
                check_pos("scaling.box_half", p.box_half)?;
                check_pos("scaling.factor", p.factor)?;
                check_count("scaling.samples_per_unit", p.samples_per_unit)?;
                if p.rhos.is_empty() || p.rhos.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
                    return Err(Error::Config("scaling.rhos must be positive".into()));
                }
                check_tol(&p.tolerances)
            }
            Scenario::Tracking => {
                let p = &self.tracking;
                if !(p.gamma > 0.0 && p.gamma < 1.0) {
                    return Err(Error::Config("tracking.gamma must lie in (0, 1)".into()));
                }
                check_eps(&p.eps)?;
                check_pos("tracking.horizon", p.horizon)?;
                check_random(&p.random)?;
                check_tol(&p.tolerances)
            }
            Scenario::Counterexample => {
                let p = &self.counterexample;
                check_pos("counterexample.lambda", p.lambda)?;
                check_pos("counterexample.sweep_min", p.sweep_min)?;
                check_pos("counterexample.quadrature_tol", p.quadrature_tol)?;
                if !(p.sweep_max >= p.sweep_min && p.sweep_max.is_finite()) || p.sweep_points < 2 {
                    return Err(Error::Config("counterexample sweep needs max >= min and two points".into()));
                }
                Ok(())
            }
            Scenario::ValueConvergence => {
                let p = &self.value;
                check_pos("value.lambda", p.lambda)?;
                check_eps(&p.eps)?;
                p.cost.validate()?;
                p.grid.validate()?;
                if !p.eps.windows(2).all(|w| w[1] < w[0]) {
                    return Err(Error::Config("value.eps must be strictly decreasing".into()));
                }
                Ok(())
            }
            Scenario::AprioriSuite => {
                let p = &self.apriori;
                check_eps(&p.eps)?;
                check_eps(&p.entry_eps)?;
                check_pos("apriori.horizon", p.horizon)?;
                check_pos("apriori.entry_level", p.entry_level)?;
                if !(p.gamma > 0.0 && p.gamma < 1.0) {
                    return Err(Error::Config("apriori.gamma must lie in (0, 1)".into()));
                }
                check_random(&p.random)?;
                check_tol(&p.tolerances)
            }
        }
    }
}

fn check_pos(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn check_count(name: &str, n: usize) -> Result<()> {
    if n > 0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least 1")))
    }
}

fn check_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        Err(Error::Config(format!("ε values must lie in (0, 1], got {eps:?}")))
    } else {
        Ok(())
    }
}

fn check_tol(t: &Tolerances) -> Result<()> {
    check_pos("rel_tol", t.rel_tol)?;
    check_pos("abs_tol", t.abs_tol)
}

fn check_random(r: &RandomControls) -> Result<()> {
    check_count("random.samples", r.samples)?;
    check_count("random.pieces", r.pieces)?;
    check_pos("random.f_inf", r.f_inf)?;
    check_pos("random.box_half", r.box_half)
}
