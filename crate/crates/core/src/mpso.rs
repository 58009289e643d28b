//! Particle swarm optimisation for offline gain tuning.
//!
//! Two update rules share one driver: the modified swarm with exponentially
//! scheduled attraction (no random factors unless asked for) and the standard
//! inertia-weight swarm with uniform random factors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Modified,
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub particles: usize,
    pub subpopulations: usize,
    pub max_iterations: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub variant: Variant,
    pub seed: u64,
    /// Multiply the modified rule's attraction terms by uniform draws.
    pub random_factors: bool,
    /// Per-step velocity limit as a fraction of each dimension's range.
    pub velocity_clamp: f64,
    /// Standard rule: inertia falls linearly from the first to the second value.
    pub inertia: (f64, f64),
    pub c1: f64,
    pub c2: f64,
}

impl SwarmConfig {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, variant: Variant, seed: u64) -> Self {
        Self {
            particles: 50,
            subpopulations: 5,
            max_iterations: 90,
            lo,
            hi,
            variant,
            seed,
            random_factors: false,
            velocity_clamp: 0.2,
            inertia: (0.9, 0.4),
            c1: 2.0,
            c2: 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<(), TuneError> {
        let bad = |m: String| Err(TuneError::Config(m));
        if self.particles == 0 || self.max_iterations == 0 {
            return bad("particles and max_iterations must be positive".into());
        }
        if self.subpopulations == 0 || self.subpopulations > self.particles {
            return bad(format!(
                "subpopulations must lie in 1..={} (the particle count), got {}",
                self.particles, self.subpopulations
            ));
        }
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return bad("bounds must be non-empty with matching lengths".into());
        }
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return bad(format!("bound {i}: need lo < hi, got [{l}, {h}]"));
            }
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp.is_finite()) {
            return bad("velocity_clamp must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TuneError {
    #[error("tuning configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Schedules of the modified swarm at iteration `i` (time index `t`).
pub fn mpso_coefficients(i: usize, t: usize, k_max: usize) -> Coefficients {
    let t = t as f64;
    let e = (0.05 * t).exp();
    Coefficients {
        w: 2.0 - (1.0 + 1.0 / (2.0 * k_max as f64)).powi(i as i32),
        c1: (-0.05 * t).exp(),
        c2: e / (1.0 + 0.05 * e),
    }
}

/// Linearly decreasing inertia with fixed acceleration constants.
pub fn standard_coefficients(i: usize, k_max: usize, inertia: (f64, f64), c1: f64, c2: f64) -> Coefficients {
    let frac = if k_max > 1 { i as f64 / (k_max - 1) as f64 } else { 0.0 };
    Coefficients { w: inertia.0 - (inertia.0 - inertia.1) * frac, c1, c2 }
}

fn update(p: &mut Particle, gbest: &[f64], w: f64, a1: f64, a2: f64, lo: &[f64], hi: &[f64], vclamp: f64) {
    for d in 0..p.position.len() {
        let vmax = vclamp * (hi[d] - lo[d]);
        let x = p.position[d];
        let v = w * p.velocity[d] + a1 * (p.best_position[d] - x) + a2 * (gbest[d] - x);
        let v = v.clamp(-vmax, vmax);
        p.velocity[d] = v;
        p.position[d] = (x + v).clamp(lo[d], hi[d]);
    }
}

/// Modified rule: V ← wV + C1(Pb − X) + C2(Gb − X), X ← X + V, then clamp.
#[allow(clippy::too_many_arguments)]
pub fn mpso_step(p: &mut Particle, gbest: &[f64], c: &Coefficients, lo: &[f64], hi: &[f64], vclamp: f64) {
    update(p, gbest, c.w, c.c1, c.c2, lo, hi, vclamp);
}

/// Standard rule with random factors r1, r2 ∈ [0, 1].
#[allow(clippy::too_many_arguments)]
pub fn standard_pso_step(
    p: &mut Particle,
    gbest: &[f64],
    c: &Coefficients,
    r1: f64,
    r2: f64,
    lo: &[f64],
    hi: &[f64],
    vclamp: f64,
) {
    update(p, gbest, c.w, c.c1 * r1, c.c2 * r2, lo, hi, vclamp);
}

/// Adopts the current position as personal best on strict improvement.
pub fn refresh_personal(p: &mut Particle) -> bool {
    if p.fitness < p.best_fitness {
        p.best_fitness = p.fitness;
        p.best_position.clone_from(&p.position);
        true
    } else {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iter: usize,
    pub best_fitness: f64,
    pub best_position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Entry 0 is the initial swarm, entry k the state after iteration k.
    pub history: Vec<HistoryEntry>,
    /// Final best of each subpopulation.
    pub subpopulation_best: Vec<f64>,
}

struct Sub {
    members: Vec<usize>,
    gbest: Vec<f64>,
    gbest_fitness: f64,
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

fn evaluate<F>(particles: &mut [Particle], fitness: &F)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        particles.par_iter_mut().for_each(|p| p.fitness = sanitize(fitness(&p.position)));
    }
    #[cfg(not(feature = "parallel"))]
    for p in particles.iter_mut() {
        p.fitness = sanitize(fitness(&p.position));
    }
}

fn refresh_sub(sub: &mut Sub, particles: &[Particle]) {
    for &i in &sub.members {
        let p = &particles[i];
        if p.best_fitness < sub.gbest_fitness {
            sub.gbest_fitness = p.best_fitness;
            sub.gbest.clone_from(&p.best_position);
        }
    }
}

fn overall(subs: &[Sub]) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, subs[0].gbest.clone());
    for s in subs {
        if s.gbest_fitness < best.0 {
            best = (s.gbest_fitness, s.gbest.clone());
        }
    }
    best
}

/// Minimises `fitness` over the box. Subpopulations evolve independently and
/// their bests are compared at the end. Results depend only on the config,
/// never on thread scheduling.
pub fn tune<F>(cfg: &SwarmConfig, fitness: F) -> Result<TuneResult, TuneError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = cfg.dim();
    let (lo, hi) = (&cfg.lo[..], &cfg.hi[..]);
    let mut rngs: Vec<ChaCha8Rng> = (0..cfg.particles)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(i as u64);
            r
        })
        .collect();
    let mut particles: Vec<Particle> = rngs
        .iter_mut()
        .map(|r| {
            let position: Vec<f64> = (0..dim).map(|d| r.random_range(lo[d]..=hi[d])).collect();
            let velocity: Vec<f64> = (0..dim)
                .map(|d| {
                    let vmax = cfg.velocity_clamp * (hi[d] - lo[d]);
                    r.random_range(-vmax..=vmax)
                })
                .collect();
            Particle {
                best_position: position.clone(),
                position,
                velocity,
                best_fitness: f64::INFINITY,
                fitness: f64::INFINITY,
            }
        })
        .collect();

    let per = cfg.particles / cfg.subpopulations;
    let extra = cfg.particles % cfg.subpopulations;
    let mut subs = Vec::with_capacity(cfg.subpopulations);
    let mut start = 0;
    for j in 0..cfg.subpopulations {
        let len = per + usize::from(j < extra);
        subs.push(Sub {
            members: (start..start + len).collect(),
            gbest: particles[start].position.clone(),
            gbest_fitness: f64::INFINITY,
        });
        start += len;
    }

    evaluate(&mut particles, &fitness);
    for p in particles.iter_mut() {
        refresh_personal(p);
    }
    for s in subs.iter_mut() {
        refresh_sub(s, &particles);
    }
    let mut history = Vec::with_capacity(cfg.max_iterations + 1);
    let (bf, bp) = overall(&subs);
    history.push(HistoryEntry { iter: 0, best_fitness: bf, best_position: bp });

    for it in 0..cfg.max_iterations {
        let coeffs = match cfg.variant {
            Variant::Modified => mpso_coefficients(it, it, cfg.max_iterations),
            Variant::Standard => standard_coefficients(it, cfg.max_iterations, cfg.inertia, cfg.c1, cfg.c2),
        };
        for s in &subs {
            for &i in &s.members {
                let p = &mut particles[i];
                let r = &mut rngs[i];
                match cfg.variant {
                    Variant::Modified if !cfg.random_factors => mpso_step(p, &s.gbest, &coeffs, lo, hi, cfg.velocity_clamp),
                    _ => {
                        let (r1, r2) = (r.random::<f64>(), r.random::<f64>());
                        standard_pso_step(p, &s.gbest, &coeffs, r1, r2, lo, hi, cfg.velocity_clamp);
                    }
                }
            }
        }
        evaluate(&mut particles, &fitness);
        for p in particles.iter_mut() {
            refresh_personal(p);
        }
        for s in subs.iter_mut() {
            refresh_sub(s, &particles);
        }
        let (bf, bp) = overall(&subs);
        history.push(HistoryEntry { iter: it + 1, best_fitness: bf, best_position: bp });
    }

    let (best_fitness, best_position) = overall(&subs);
    Ok(TuneResult {
        best_position,
        best_fitness,
        history,
        subpopulation_best: subs.iter().map(|s| s.gbest_fitness).collect(),
    })
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}
