//! Browser demo bindings. The plain functions return JSON strings and are
//! tested natively; the `#[wasm_bindgen]` exports are thin wrappers.

use serde_json::{json, Value};
use smc_core::config::{self, Config};
use smc_core::mpso::{sphere, tune, SwarmConfig, Variant};
use smc_core::reaching::{ReachingLawSpec, SwitchFn};
use smc_core::sim::{compare, compute_metrics, simulate};
use wasm_bindgen::prelude::wasm_bindgen;

/// Longest trajectory sent to the page; longer runs are decimated.
const MAX_POINTS: usize = 2000;

pub fn preset_names() -> Vec<&'static str> {
    config::BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    config::bundled(name)
}

/// Runs a scenario given as TOML text. Includes the comparison table when
/// the file has `[[compare]]` entries.
pub fn run_scenario(toml_text: &str) -> Result<String, String> {
    let cfg = Config::from_toml(toml_text).map_err(|e| e.to_string())?;
    let sc = &cfg.scenario;
    let tr = simulate(sc).map_err(|e| e.to_string())?;
    let m = compute_metrics(&tr, &sc.reference, sc.settle_band);
    let stride = tr.records.len().div_ceil(MAX_POINTS).max(1);
    let pick = |f: fn(&smc_core::sim::Record) -> f64| -> Vec<f64> { tr.records.iter().step_by(stride).map(f).collect() };
    let reference: Vec<f64> = tr.records.iter().step_by(stride).map(|r| sc.reference.at(r.t).r).collect();

    let comparison = if cfg.compare.is_empty() {
        Value::Null
    } else {
        let cmp = compare(&cfg.compare).map_err(|e| e.to_string())?;
        let orderings: Vec<Value> = cfg
            .orderings
            .iter()
            .map(|o| json!({ "metric": o.metric, "order": o.order, "error": cmp.check(o).err() }))
            .collect();
        json!({ "rows": cmp.rows, "orderings": orderings })
    };

    Ok(json!({
        "name": sc.name,
        "plant": sc.plant.name(),
        "controller": sc.controller.kind.as_str(),
        "t": pick(|r| r.t),
        "y": pick(|r| r.x[0]),
        "r": reference,
        "u": pick(|r| r.u),
        "s": pick(|r| r.s),
        "metrics": m,
        "abort": tr.abort.as_ref().map(|a| format!("step {}: {}", a.step, a.reason)),
        "comparison": comparison,
    })
    .to_string())
}

/// Demanded ṡ against s for the power-rate-exponential law (sat and sign)
/// and the exponential law with the same k.
pub fn reaching_curves(k: f64, k_sc: f64, alpha: f64, boundary: f64, span: f64) -> Result<String, String> {
    let mut pre = ReachingLawSpec { boundary_width: boundary, ..ReachingLawSpec::power_rate_exponential(k, k_sc, alpha) };
    pre.validate().map_err(|e| e.to_string())?;
    if !(span.is_finite() && span > 0.0) {
        return Err(format!("span must be positive, got {span}"));
    }
    let sign = ReachingLawSpec { switch_fn: Some(SwitchFn::Sign), ..pre };
    let expo = ReachingLawSpec::exponential(k_sc.max(1e-9), k);
    pre.switch_fn = Some(SwitchFn::Sat);
    let n = 401;
    let s: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
    let eval = |l: &ReachingLawSpec| -> Vec<f64> { s.iter().map(|&x| l.demand(x, 0.0)).collect() };
    Ok(json!({
        "s": s,
        "pre_sat": eval(&pre),
        "pre_sign": eval(&sign),
        "exponential": eval(&expo),
    })
    .to_string())
}

/// Best-so-far traces of both swarm variants on the 2-D sphere.
pub fn swarm_race(seed: u64, iterations: usize, particles: usize) -> Result<String, String> {
    let mut cfg = SwarmConfig::new(vec![-5.0; 2], vec![5.0; 2], Variant::Modified, seed);
    cfg.max_iterations = iterations;
    cfg.particles = particles;
    cfg.subpopulations = cfg.subpopulations.min(particles.max(1));
    let modified = tune(&cfg, sphere).map_err(|e| e.to_string())?;
    cfg.variant = Variant::Standard;
    let standard = tune(&cfg, sphere).map_err(|e| e.to_string())?;
    let trace = |r: &smc_core::mpso::TuneResult| -> Vec<f64> { r.history.iter().map(|h| h.best_fitness).collect() };
    Ok(json!({
        "modified": trace(&modified),
        "standard": trace(&standard),
        "modified_best": modified.best_position,
        "standard_best": standard.best_position,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn presets() -> String {
    json!(preset_names()).to_string()
}

#[wasm_bindgen]
pub fn preset(name: &str) -> Result<String, String> {
    preset_text(name).map(str::to_string).ok_or_else(|| format!("no preset `{name}`"))
}

#[wasm_bindgen]
pub fn simulate_toml(toml_text: &str) -> Result<String, String> {
    run_scenario(toml_text)
}

#[wasm_bindgen]
pub fn law_curves(k: f64, k_sc: f64, alpha: f64, boundary: f64, span: f64) -> Result<String, String> {
    reaching_curves(k, k_sc, alpha, boundary, span)
}

#[wasm_bindgen]
pub fn swarm(seed: u32, iterations: u32, particles: u32) -> Result<String, String> {
    swarm_race(u64::from(seed), iterations as usize, particles as usize)
}
