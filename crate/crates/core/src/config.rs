//! Scenario files (TOML) and the bundled reference scenarios.
//!
//! Unknown keys are rejected everywhere so a misspelt gain name fails loudly.
//! The key reference lives in `docs/config.md`.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::controllers::{ControllerKind, ControllerSpec, PdBranch};
use crate::mpso::{SwarmConfig, Variant};
use crate::plants::{Plant, Uncertainty};
use crate::reaching::ReachingLawSpec;
use crate::sim::{compute_metrics, simulate, Disturbance, Ordering, Scenario};
use crate::surfaces::{Reference, SurfaceGains};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PdSection {
    kp: f64,
    reaching_law: ReachingLawSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerSection {
    kind: ControllerKind,
    #[serde(default)]
    u_limit: Option<f64>,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    pd: Option<PdSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    dt: f64,
    #[serde(alias = "T")]
    duration: f64,
    initial_state: Vec<f64>,
    #[serde(default)]
    control_hold: bool,
    #[serde(default)]
    settle_band: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareEntry {
    label: String,
    controller: ControllerSection,
    #[serde(default)]
    surface: Option<SurfaceGains>,
    #[serde(default)]
    reaching_law: Option<ReachingLawSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// ISE of the scenario with the candidate gains.
    Ise,
    /// Σx² over the raw parameter vector (optimiser self-test).
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainBound {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    #[serde(default = "d_particles")]
    pub particles: usize,
    #[serde(default = "d_subpops")]
    pub subpopulations: usize,
    #[serde(default = "d_iters")]
    pub max_iterations: usize,
    #[serde(default = "d_variant")]
    pub variant: Variant,
    #[serde(default)]
    pub random_factors: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_vclamp")]
    pub velocity_clamp: f64,
    #[serde(default = "d_objective")]
    pub objective: Objective,
    #[serde(default)]
    pub chattering_weight: f64,
    pub gain: Vec<GainBound>,
}

fn d_particles() -> usize {
    50
}
fn d_subpops() -> usize {
    5
}
fn d_iters() -> usize {
    90
}
fn d_variant() -> Variant {
    Variant::Modified
}
fn d_vclamp() -> f64 {
    0.2
}
fn d_objective() -> Objective {
    Objective::Ise
}

impl TuningSection {
    pub fn swarm(&self) -> SwarmConfig {
        SwarmConfig {
            particles: self.particles,
            subpopulations: self.subpopulations,
            max_iterations: self.max_iterations,
            lo: self.gain.iter().map(|g| g.lo).collect(),
            hi: self.gain.iter().map(|g| g.hi).collect(),
            variant: self.variant,
            seed: self.seed,
            random_factors: self.random_factors,
            velocity_clamp: self.velocity_clamp,
            ..SwarmConfig::new(vec![], vec![], self.variant, self.seed)
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.gain.iter().map(|g| g.name.clone()).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    name: Option<String>,
    plant: Plant,
    controller: ControllerSection,
    #[serde(default)]
    surface: SurfaceGains,
    #[serde(default)]
    reaching_law: Option<ReachingLawSpec>,
    reference: Reference,
    #[serde(default)]
    disturbance: Disturbance,
    #[serde(default)]
    uncertainty: Option<Uncertainty>,
    #[serde(default)]
    perturbation: BTreeMap<String, f64>,
    sim: SimSection,
    #[serde(default)]
    tuning: Option<TuningSection>,
    #[serde(default)]
    compare: Vec<CompareEntry>,
    #[serde(default)]
    ordering: Vec<Ordering>,
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
    pub compare: Vec<Scenario>,
    pub orderings: Vec<Ordering>,
    pub tuning: Option<TuningSection>,
}

fn controller_spec(
    c: &ControllerSection,
    surface: SurfaceGains,
    law: Option<ReachingLawSpec>,
) -> ControllerSpec {
    ControllerSpec {
        kind: c.kind,
        surface,
        law,
        u_limit: c.u_limit,
        gamma: c.gamma.unwrap_or(1.0),
        pd: c.pd.as_ref().map(|p| PdBranch { kp: p.kp, law: p.reaching_law }),
    }
}

fn initial_state(plant: &Plant, v: &[f64]) -> Result<[f64; 2], ConfigError> {
    match (plant.order(), v) {
        (1, [h]) => Ok([*h, 0.0]),
        (2, [a, b]) => Ok([*a, *b]),
        (n, _) => Err(ConfigError::Invalid(format!(
            "sim.initial_state needs {n} component(s) for plant `{}`, got {}",
            plant.name(),
            v.len()
        ))),
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let f: FileConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let x0 = initial_state(&f.plant, &f.sim.initial_state)?;
        let name = f.name.clone().unwrap_or_else(|| f.controller.kind.as_str().to_string());
        let scenario = Scenario {
            name,
            plant: f.plant,
            controller: controller_spec(&f.controller, f.surface, f.reaching_law),
            reference: f.reference,
            disturbance: f.disturbance,
            uncertainty: f.uncertainty,
            perturbation: f.perturbation.clone(),
            initial_state: x0,
            duration: f.sim.duration,
            dt: f.sim.dt,
            control_hold: f.sim.control_hold,
            settle_band: f.sim.settle_band,
        };
        scenario.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut compare = Vec::with_capacity(f.compare.len());
        for c in &f.compare {
            let sc = Scenario {
                name: c.label.clone(),
                controller: controller_spec(
                    &c.controller,
                    c.surface.unwrap_or(f.surface),
                    c.reaching_law.or(f.reaching_law),
                ),
                ..scenario.clone()
            };
            sc.validate()
                .map_err(|e| ConfigError::Invalid(format!("compare entry `{}`: {e}", c.label)))?;
            compare.push(sc);
        }
        for o in &f.ordering {
            for l in &o.order {
                if !compare.iter().any(|s| &s.name == l) {
                    return Err(ConfigError::Invalid(format!("ordering names unknown label `{l}`")));
                }
            }
            if !crate::sim::Metrics::KEYS.contains(&o.metric.as_str()) {
                return Err(ConfigError::Invalid(format!("ordering names unknown metric `{}`", o.metric)));
            }
        }
        if let Some(t) = &f.tuning {
            validate_tuning(t, &scenario)?;
        }
        Ok(Config { scenario, compare, orderings: f.ordering, tuning: f.tuning })
    }

    /// Replaces the step size everywhere.
    pub fn with_dt(mut self, dt: f64) -> Result<Config, ConfigError> {
        for sc in std::iter::once(&mut self.scenario).chain(self.compare.iter_mut()) {
            sc.dt = dt;
            sc.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Config {
        if let Some(t) = self.tuning.as_mut() {
            t.seed = seed;
        }
        self
    }
}

fn validate_tuning(t: &TuningSection, base: &Scenario) -> Result<(), ConfigError> {
    t.swarm().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if t.chattering_weight < 0.0 || !t.chattering_weight.is_finite() {
        return Err(ConfigError::Invalid("tuning.chattering_weight must be ≥ 0".into()));
    }
    if t.objective == Objective::Ise {
        for g in &t.gain {
            let mut spec = base.controller;
            set_gain(&mut spec, &g.name, 1.0).map_err(ConfigError::Invalid)?;
            if g.hi <= 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "tuning gain `{}`: bounds [{}, {}] contain no positive value",
                    g.name, g.lo, g.hi
                )));
            }
        }
    }
    Ok(())
}

/// Writes one named gain into a controller spec.
pub fn set_gain(spec: &mut ControllerSpec, name: &str, v: f64) -> Result<(), String> {
    let no_law = || format!("gain `{name}` needs a reaching law in the scenario");
    match name {
        "kp" => spec.surface.kp = v,
        "ki" => spec.surface.ki = v,
        "kd" => spec.surface.kd = v,
        "lambda" => spec.surface.lambda = v,
        "gamma" => spec.gamma = v,
        "k" | "k_sc" | "eps" | "alpha" | "k1" | "k2" | "eps1" | "eps2" | "boundary_width" => {
            let l = spec.law.as_mut().ok_or_else(no_law)?;
            match name {
                "k" => l.k = v,
                "k_sc" => l.k_sc = v,
                "eps" => l.eps = v,
                "alpha" => l.alpha = v,
                "k1" => l.k1 = v,
                "k2" => l.k2 = v,
                "eps1" => l.eps1 = v,
                "eps2" => l.eps2 = v,
                _ => l.boundary_width = v,
            }
        }
        "pd.kp" | "pd.k1" | "pd.eps1" | "pd.alpha" => {
            let pd = spec.pd.as_mut().ok_or_else(|| format!("gain `{name}` needs a pd branch"))?;
            match name {
                "pd.kp" => pd.kp = v,
                "pd.k1" => pd.law.k1 = v,
                "pd.eps1" => pd.law.eps1 = v,
                _ => pd.law.alpha = v,
            }
        }
        _ => return Err(format!("unknown tunable gain `{name}`")),
    }
    Ok(())
}

/// ISE (+ optional chattering penalty) of a scenario with substituted gains.
/// Invalid gains and aborted runs score +∞.
#[derive(Debug, Clone)]
pub struct ScenarioObjective {
    pub base: Scenario,
    pub names: Vec<String>,
    pub chattering_weight: f64,
}

impl ScenarioObjective {
    pub fn with_gains(&self, x: &[f64]) -> Result<Scenario, String> {
        let mut sc = self.base.clone();
        for (n, v) in self.names.iter().zip(x) {
            set_gain(&mut sc.controller, n, *v)?;
        }
        Ok(sc)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let Ok(sc) = self.with_gains(x) else { return f64::INFINITY };
        let Ok(tr) = simulate(&sc) else { return f64::INFINITY };
        if !tr.is_complete() {
            return f64::INFINITY;
        }
        let m = compute_metrics(&tr, &sc.reference, sc.settle_band);
        let ise = m.ise.unwrap_or(f64::INFINITY);
        let chat = m.chattering_index.unwrap_or(f64::INFINITY);
        let f = if self.chattering_weight > 0.0 { ise + self.chattering_weight * chat } else { ise };
        if f.is_finite() {
            f
        } else {
            f64::INFINITY
        }
    }
}

/// Reference scenarios shipped with the library.
pub const BUNDLED: &[(&str, &str)] = &[
    ("impulse_stabilization", include_str!("../scenarios/impulse_stabilization.toml")),
    ("pid_swingup", include_str!("../scenarios/pid_swingup.toml")),
    ("vdp_tracking", include_str!("../scenarios/vdp_tracking.toml")),
    ("impulse_ranking", include_str!("../scenarios/impulse_ranking.toml")),
    ("swingup_composite", include_str!("../scenarios/swingup_composite.toml")),
    ("tank_level", include_str!("../scenarios/tank_level.toml")),
    ("pi2smc_singular", include_str!("../scenarios/pi2smc_singular.toml")),
    ("pendulum_tuning", include_str!("../scenarios/pendulum_tuning.toml")),
    ("sphere_selftest", include_str!("../scenarios/sphere_selftest.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load_bundled(name: &str) -> Result<Config, ConfigError> {
    Config::from_toml(bundled(name).ok_or_else(|| ConfigError::Invalid(format!("no bundled scenario `{name}`")))?)
}
