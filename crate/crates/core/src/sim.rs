//! Fixed-step closed-loop simulation, trajectory recording and metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::controllers::{lyapunov_diagnostics, ControlError, ControlOutput, ControllerKind, ControllerSpec};
use crate::plants::{Plant, PlantError, Uncertainty};
use crate::surfaces::{pd_surface, pi_surface, pid_surface, ErrorState, RefSample, Reference, SurfaceKind};

/// Any state component beyond this magnitude counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Disturbance {
    #[default]
    None,
    Sinusoid { amplitude: f64, angular_freq: f64 },
    /// `area · δ(t − fire_time)`, realised as one step of height area/dt.
    Impulse { area: f64, fire_time: f64 },
}

impl Disturbance {
    pub fn eval(&self, t: f64, dt: f64) -> f64 {
        match *self {
            Disturbance::None => 0.0,
            Disturbance::Sinusoid { amplitude, angular_freq } => amplitude * (angular_freq * t).sin(),
            Disturbance::Impulse { area, fire_time } => {
                if step_contains(t, dt, fire_time) {
                    area / dt
                } else {
                    0.0
                }
            }
        }
    }

    /// Upper bound on |d(t)| at step `dt`.
    pub fn d_max(&self, dt: f64) -> f64 {
        match *self {
            Disturbance::None => 0.0,
            Disturbance::Sinusoid { amplitude, .. } => amplitude.abs(),
            Disturbance::Impulse { area, .. } => area.abs() / dt,
        }
    }
}

/// True when `t_f` lies in the step [t, t + dt).
fn step_contains(t: f64, dt: f64, t_f: f64) -> bool {
    let i = (t / dt).round();
    let k = (t_f / dt + 1e-9).floor();
    i == k
}

/// One classical Runge–Kutta step for a fallible vector field.
pub fn rk4_step<const N: usize, E>(
    mut f: impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    t: f64,
    x: &[f64; N],
    dt: f64,
) -> Result<[f64; N], E> {
    let axpy = |a: f64, k: &[f64; N]| {
        let mut o = *x;
        for i in 0..N {
            o[i] += a * k[i];
        }
        o
    };
    let k1 = f(t, x)?;
    let k2 = f(t + dt / 2.0, &axpy(dt / 2.0, &k1))?;
    let k3 = f(t + dt / 2.0, &axpy(dt / 2.0, &k2))?;
    let k4 = f(t + dt, &axpy(dt, &k3))?;
    let mut o = *x;
    for i in 0..N {
        o[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(o)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub plant: Plant,
    pub controller: ControllerSpec,
    pub reference: Reference,
    pub disturbance: Disturbance,
    pub uncertainty: Option<Uncertainty>,
    /// Fractional changes applied to the simulated plant only.
    pub perturbation: BTreeMap<String, f64>,
    pub initial_state: [f64; 2],
    pub duration: f64,
    pub dt: f64,
    /// Hold u over each step instead of re-evaluating it at RK4 stages.
    pub control_hold: bool,
    pub settle_band: Option<f64>,
}

impl Scenario {
    pub fn steps(&self) -> Result<usize, SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration >= self.dt) {
            return Err(SimError::Invalid(format!("duration {} is shorter than dt", self.duration)));
        }
        let n = (self.duration / self.dt).round();
        if ((n * self.dt) - self.duration).abs() > 1e-9 * self.duration.max(1.0) {
            return Err(SimError::Invalid(format!(
                "duration {} is not a whole number of steps of {}",
                self.duration, self.dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.steps()?;
        self.plant.validate().map_err(SimError::Invalid)?;
        self.plant.perturbed(&self.perturbation).map_err(SimError::Invalid)?;
        self.controller
            .validate(self.plant.order())
            .map_err(|e| SimError::Invalid(e.to_string()))?;
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Invalid("initial state must be finite".into()));
        }
        if let Disturbance::Impulse { area, fire_time } = self.disturbance {
            if !area.is_finite() || !fire_time.is_finite() {
                return Err(SimError::Invalid("impulse area and time must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("compare: scenario `{label}` differs in {field}")]
    Mismatch { label: String, field: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AbortReason {
    Singularity(String),
    NonFinite(String),
    Plant(String),
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::Singularity(m) => write!(f, "singularity: {m}"),
            AbortReason::NonFinite(m) => write!(f, "non-finite: {m}"),
            AbortReason::Plant(m) => write!(f, "plant: {m}"),
        }
    }
}

impl From<ControlError> for AbortReason {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::Singularity { .. } => AbortReason::Singularity(e.to_string()),
            other => AbortReason::NonFinite(other.to_string()),
        }
    }
}

impl From<PlantError> for AbortReason {
    fn from(e: PlantError) -> Self {
        AbortReason::Plant(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Abort {
    pub step: usize,
    pub t: f64,
    pub reason: AbortReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Record {
    pub t: f64,
    pub x: [f64; 2],
    pub e: f64,
    pub u: f64,
    pub u_eq: f64,
    pub u_sw: f64,
    pub s: f64,
    pub s_dot: f64,
    pub v: f64,
    pub v_dot: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub records: Vec<Record>,
    pub abort: Option<Abort>,
    /// Steps where the actuator limit was active.
    pub clipped_steps: usize,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.abort.is_none()
    }

    pub fn singular(&self) -> bool {
        matches!(self.abort, Some(Abort { reason: AbortReason::Singularity(_), .. }))
    }
}

struct Loop<'a> {
    sc: &'a Scenario,
    truth: Plant,
    order: usize,
}

impl Loop<'_> {
    fn error(&self, t: f64, z: &[f64; 3]) -> (ErrorState, RefSample) {
        let r = self.sc.reference.at(t);
        let e_dot = if self.order == 2 { r.r_dot - z[1] } else { 0.0 };
        (ErrorState { e: r.r - z[0], e_dot, e_int: z[2], e_ddot: 0.0 }, r)
    }

    fn control(&self, t: f64, z: &[f64; 3]) -> Result<ControlOutput, AbortReason> {
        let (err, r) = self.error(t, z);
        let m = self.sc.plant.decompose([z[0], z[1]])?;
        Ok(self.sc.controller.compute(&err, &r, &m, self.order)?)
    }

    fn extra(&self, t: f64, d: f64) -> f64 {
        d + self.sc.uncertainty.map_or(0.0, |u| u.at(t))
    }

    fn field(&self, t: f64, z: &[f64; 3], u: f64, d: f64) -> Result<[f64; 3], AbortReason> {
        let dx = self.truth.derivative([z[0], z[1]], u, self.extra(t, d))?;
        let r = self.sc.reference.at(t).r;
        Ok([dx[0], dx[1], r - z[0]])
    }

    /// Measured surface quantities from the true plant response.
    fn measure(&self, t: f64, z: &[f64; 3], u: f64, d: f64) -> Result<(f64, f64, f64, f64), AbortReason> {
        let (mut err, r) = self.error(t, z);
        let dx = self.truth.derivative([z[0], z[1]], u, self.extra(t, d))?;
        let g = &self.sc.controller.surface;
        let kind = self.sc.controller.kind;
        let (s, s_dot, s_ddot) = if self.order == 1 {
            err.e_dot = r.r_dot - dx[0];
            (g.kp * err.e + g.ki * err.e_int, g.kp * err.e_dot + g.ki * err.e, 0.0)
        } else {
            err.e_ddot = r.r_ddot - dx[1];
            match kind.surface_kind(2) {
                SurfaceKind::Pid => {
                    let (s, sd) = pid_surface(g, &err);
                    (s, sd, 0.0)
                }
                SurfaceKind::Pi => pi_surface(g, &err),
                SurfaceKind::Pd => {
                    let (s, sd) = pd_surface(g, &err);
                    (s, sd, 0.0)
                }
                SurfaceKind::Lambda => (
                    err.e_dot + g.lambda * err.e,
                    err.e_ddot + g.lambda * err.e_dot,
                    0.0,
                ),
            }
        };
        let (v, v_dot) = lyapunov_diagnostics(s, s_dot, s_ddot, kind.lyapunov_order());
        Ok((s, s_dot, v, v_dot))
    }
}

/// Runs the closed loop. An invalid scenario is an error; a singularity or
/// divergence during the run ends it early with `abort` set.
pub fn simulate(sc: &Scenario) -> Result<Trajectory, SimError> {
    sc.validate()?;
    let n = sc.steps()?;
    let truth = sc.plant.perturbed(&sc.perturbation).map_err(SimError::Invalid)?;
    let lp = Loop { sc, truth, order: sc.plant.order() };
    let dt = sc.dt;
    let x0 = sc.plant.project(sc.initial_state);
    let mut z = [x0[0], if lp.order == 2 { x0[1] } else { 0.0 }, 0.0];
    let mut records = Vec::with_capacity(n + 1);
    let mut clipped_steps = 0;
    let mut abort = None;

    for i in 0..=n {
        let t = i as f64 * dt;
        let out = match lp.control(t, &z) {
            Ok(o) => o,
            Err(reason) => {
                abort = Some(Abort { step: i, t, reason });
                break;
            }
        };
        let d = sc.disturbance.eval(t, dt);
        let (s, s_dot, v, v_dot) = match lp.measure(t, &z, out.u, d) {
            Ok(m) => m,
            Err(reason) => {
                abort = Some(Abort { step: i, t, reason });
                break;
            }
        };
        if out.clipped {
            clipped_steps += 1;
        }
        let (err, _) = lp.error(t, &z);
        records.push(Record {
            t,
            x: [z[0], z[1]],
            e: err.e,
            u: out.u,
            u_eq: out.u_eq,
            u_sw: out.u_sw,
            s,
            s_dot,
            v,
            v_dot,
            d,
        });
        if i == n {
            break;
        }
        let step = rk4_step(
            |ts, zs: &[f64; 3]| {
                let u = if sc.control_hold { out.u } else { lp.control(ts, zs)?.u };
                lp.field(ts, zs, u, d)
            },
            t,
            &z,
            dt,
        );
        match step {
            Ok(next) => {
                let p = lp.truth.project([next[0], next[1]]);
                z = [p[0], p[1], next[2]];
                if z.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
                    abort = Some(Abort {
                        step: i + 1,
                        t: (i + 1) as f64 * dt,
                        reason: AbortReason::NonFinite(format!("state diverged to {z:?}")),
                    });
                    break;
                }
            }
            Err(reason) => {
                abort = Some(Abort { step: i + 1, t: (i + 1) as f64 * dt, reason });
                break;
            }
        }
    }
    Ok(Trajectory { dt, records, abort, clipped_steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub rise_time: Option<f64>,
    pub settling_time: Option<f64>,
    pub peak_overshoot: Option<f64>,
    pub ise: Option<f64>,
    pub chattering_index: Option<f64>,
    pub steady_state_error: Option<f64>,
}

impl Metrics {
    pub const KEYS: [&'static str; 6] = [
        "rise_time",
        "settling_time",
        "peak_overshoot",
        "ise",
        "chattering_index",
        "steady_state_error",
    ];

    pub fn values(&self) -> [Option<f64>; 6] {
        [
            self.rise_time,
            self.settling_time,
            self.peak_overshoot,
            self.ise,
            self.chattering_index,
            self.steady_state_error,
        ]
    }

    pub fn get(&self, key: &str) -> Option<Option<f64>> {
        Self::KEYS.iter().position(|k| *k == key).map(|i| self.values()[i])
    }
}

/// Linear-interpolated time at which `y` first reaches `level` moving in
/// direction `dir`, searching from index `from`.
fn crossing(ts: &[f64], ys: &[f64], level: f64, dir: f64, from: usize) -> Option<(f64, usize)> {
    for i in from..ys.len() {
        if dir * (ys[i] - level) >= 0.0 {
            if i == 0 || i == from {
                return Some((ts[i], i));
            }
            let (a, b) = (ys[i - 1], ys[i]);
            let frac = if b != a { (level - a) / (b - a) } else { 1.0 };
            return Some((ts[i - 1] + frac * (ts[i] - ts[i - 1]), i));
        }
    }
    None
}

/// Band used when the scenario does not set one: 2% of the step, or 0.02
/// absolute when regulating to zero or tracking a moving reference.
pub fn default_band(reference: &Reference, y0: f64) -> f64 {
    match *reference {
        Reference::Constant { value } if value != 0.0 && (value - y0).abs() > 1e-12 => 0.02 * (value - y0).abs(),
        _ => 0.02,
    }
}

pub fn compute_metrics(traj: &Trajectory, reference: &Reference, settle_band: Option<f64>) -> Metrics {
    let rec = &traj.records;
    if rec.is_empty() {
        return Metrics::default();
    }
    let ts: Vec<f64> = rec.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = rec.iter().map(|r| r.x[0]).collect();
    let es: Vec<f64> = rec.iter().map(|r| r.e).collect();
    let y0 = ys[0];
    let band = settle_band.unwrap_or_else(|| default_band(reference, y0));

    let ise = es.windows(2).map(|w| 0.5 * (w[0] * w[0] + w[1] * w[1]) * traj.dt).sum::<f64>();
    let chat = rec.windows(2).map(|w| (w[1].u - w[0].u).abs()).sum::<f64>();

    let mut m = Metrics {
        ise: Some(ise),
        chattering_index: Some(chat),
        ..Default::default()
    };
    if !traj.is_complete() {
        return m;
    }

    let last_out = es.iter().rposition(|e| e.abs() > band);
    m.settling_time = match last_out {
        None => Some(0.0),
        Some(i) if i + 1 < ts.len() => Some(ts[i + 1]),
        Some(_) => None,
    };

    let tail = (rec.len() / 10).max(1);
    m.steady_state_error = Some(es[rec.len() - tail..].iter().fold(0.0f64, |a, e| a.max(e.abs())));

    if let Reference::Constant { value } = *reference {
        let step = value - y0;
        if step.abs() > 1e-12 {
            let dir = step.signum();
            if let Some((t10, i10)) = crossing(&ts, &ys, y0 + 0.1 * step, dir, 0) {
                m.rise_time = crossing(&ts, &ys, y0 + 0.9 * step, dir, i10).map(|(t90, _)| t90 - t10);
            }
            m.peak_overshoot = Some(match crossing(&ts, &ys, value, dir, 0) {
                Some((_, i)) => ys[i..].iter().fold(0.0f64, |a, y| a.max(dir * (y - value))),
                None => 0.0,
            });
        }
    }
    m
}

/// Fraction of steps outside the boundary layer that satisfy the reaching
/// condition and Lyapunov decrease.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReachingStats {
    pub considered: usize,
    pub reach_fraction: f64,
    pub lyapunov_fraction: f64,
}

pub fn reaching_stats(traj: &Trajectory, delta: f64) -> ReachingStats {
    let rec = &traj.records;
    let mut n = 0usize;
    let mut reach = 0usize;
    let mut lyap = 0usize;
    for w in rec.windows(2) {
        if w[0].s.abs() > delta {
            n += 1;
            if w[0].s * w[0].s_dot < 0.0 {
                reach += 1;
            }
            if w[1].v <= w[0].v {
                lyap += 1;
            }
        }
    }
    let frac = |k: usize| if n == 0 { 1.0 } else { k as f64 / n as f64 };
    ReachingStats { considered: n, reach_fraction: frac(reach), lyapunov_fraction: frac(lyap) }
}

/// Time of the first sample with |s| ≤ delta.
pub fn first_reach_time(traj: &Trajectory, delta: f64) -> Option<f64> {
    traj.records.iter().find(|r| r.s.abs() <= delta).map(|r| r.t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub controller: ControllerKind,
    pub metrics: Metrics,
    pub abort: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ordering {
    pub metric: String,
    /// Labels in strictly increasing order of `metric`.
    pub order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Checks one ordering; the error text explains the first violation.
    pub fn check(&self, o: &Ordering) -> Result<(), String> {
        let mut prev: Option<(&str, f64)> = None;
        for label in &o.order {
            let row = self.row(label).ok_or_else(|| format!("no row labelled `{label}`"))?;
            let v = row
                .metrics
                .get(&o.metric)
                .ok_or_else(|| format!("unknown metric `{}`", o.metric))?
                .ok_or_else(|| format!("{} of `{label}` is undefined", o.metric))?;
            if let Some((pl, pv)) = prev {
                if !(pv < v) {
                    return Err(format!("{}: expected {pl} ({pv}) < {label} ({v})", o.metric));
                }
            }
            prev = Some((label, v));
        }
        Ok(())
    }
}

/// Runs scenarios that share plant, reference, disturbance and horizon.
pub fn compare(scenarios: &[Scenario]) -> Result<Comparison, SimError> {
    if let Some(first) = scenarios.first() {
        for sc in &scenarios[1..] {
            let field = if sc.plant != first.plant {
                Some("plant")
            } else if sc.reference != first.reference {
                Some("reference")
            } else if sc.disturbance != first.disturbance {
                Some("disturbance")
            } else if sc.duration != first.duration || sc.dt != first.dt {
                Some("duration")
            } else {
                None
            };
            if let Some(field) = field {
                return Err(SimError::Mismatch { label: sc.name.clone(), field });
            }
        }
    }
    let run = |sc: &Scenario| -> Result<ComparisonRow, SimError> {
        let tr = simulate(sc)?;
        Ok(ComparisonRow {
            label: sc.name.clone(),
            controller: sc.controller.kind,
            metrics: compute_metrics(&tr, &sc.reference, sc.settle_band),
            abort: tr.abort.as_ref().map(|a| format!("step {}: {}", a.step, a.reason)),
        })
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        scenarios.par_iter().map(run).collect::<Result<Vec<_>, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows = scenarios.iter().map(run).collect::<Result<Vec<_>, _>>()?;
    Ok(Comparison { rows })
}
