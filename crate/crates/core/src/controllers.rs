//! Closed-form sliding-mode control laws.
//!
//! Each law solves the surface dynamics for `u` so that the nominal closed
//! loop obeys the configured reaching law exactly. With e = r − y the plant
//! enters every surface rate through `ë = r̈ − f − g u` (or `ė = ṙ − f − g u`
//! for the first-order tank), which fixes all signs below.

use serde::{Deserialize, Serialize};

use crate::plants::Affine;
use crate::reaching::{LawVariant, ReachingLawSpec};
use crate::surfaces::{lambda_surface, pd_surface, pi_surface, pid_surface, ErrorState, RefSample, SurfaceGains, SurfaceKind};

/// Smallest admissible |gain · g| before a law reports a singularity.
pub const G_FLOOR: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("{law}: control gain {value:e} is below the singularity floor")]
    Singularity { law: &'static str, value: f64 },
    #[error("{0}: non-finite control")]
    NonFinite(&'static str),
    #[error("invalid controller: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Equivalent,
    PidSmc,
    #[serde(rename = "pi_2smc")]
    Pi2smc,
    PdSmc,
    PiPdComposite,
    ClassicalSmc,
    Pid,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::Equivalent => "equivalent",
            ControllerKind::PidSmc => "pid_smc",
            ControllerKind::Pi2smc => "pi_2smc",
            ControllerKind::PdSmc => "pd_smc",
            ControllerKind::PiPdComposite => "pi_pd_composite",
            ControllerKind::ClassicalSmc => "classical_smc",
            ControllerKind::Pid => "pid",
        }
    }

    /// Surface the kind is built on, given the plant order.
    pub fn surface_kind(&self, plant_order: usize) -> SurfaceKind {
        match self {
            ControllerKind::Equivalent | ControllerKind::PidSmc | ControllerKind::Pid if plant_order == 1 => SurfaceKind::Pi,
            ControllerKind::Equivalent | ControllerKind::PidSmc | ControllerKind::Pid => SurfaceKind::Pid,
            ControllerKind::Pi2smc | ControllerKind::PiPdComposite => SurfaceKind::Pi,
            ControllerKind::PdSmc => SurfaceKind::Pd,
            ControllerKind::ClassicalSmc => SurfaceKind::Lambda,
        }
    }

    /// Order of the Lyapunov function matching the law.
    pub fn lyapunov_order(&self) -> u32 {
        match self {
            ControllerKind::Pi2smc | ControllerKind::PiPdComposite => 2,
            _ => 1,
        }
    }
}

/// PD branch of the composite controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdBranch {
    pub kp: f64,
    pub law: ReachingLawSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    pub surface: SurfaceGains,
    pub law: Option<ReachingLawSpec>,
    pub u_limit: Option<f64>,
    /// Composite mix, 0 gives the PI branch alone.
    pub gamma: f64,
    pub pd: Option<PdBranch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlOutput {
    pub u: f64,
    pub u_eq: f64,
    pub u_sw: f64,
    pub s: f64,
    /// Surface rate predicted by the nominal model under `u`.
    pub s_dot: f64,
    pub v: f64,
    pub v_dot: f64,
    pub clipped: bool,
    /// (u_PI, u_PD) for the composite.
    pub branches: Option<(f64, f64)>,
}

fn guard(law: &'static str, denom: f64) -> Result<f64, ControlError> {
    if denom.abs() <= G_FLOOR || !denom.is_finite() {
        Err(ControlError::Singularity { law, value: denom })
    } else {
        Ok(denom)
    }
}

fn finish(law: &'static str, u_eq: f64, u_sw: f64) -> Result<(f64, f64), ControlError> {
    if (u_eq + u_sw).is_finite() {
        Ok((u_eq, u_sw))
    } else {
        Err(ControlError::NonFinite(law))
    }
}

/// u_eq that holds ṡ = 0 on the PID surface.
pub fn equivalent_control(err: &ErrorState, r_ddot: f64, m: &Affine, g: &SurfaceGains) -> Result<f64, ControlError> {
    let den = guard("equivalent", g.kd * m.g)?;
    let u = (g.ki * err.e + g.kp * err.e_dot + g.kd * (r_ddot - m.f)) / den;
    finish("equivalent", u, 0.0).map(|p| p.0)
}

fn pid_family(
    name: &'static str,
    err: &ErrorState,
    r_ddot: f64,
    m: &Affine,
    g: &SurfaceGains,
    law: Option<&ReachingLawSpec>,
) -> Result<ControlOutput, ControlError> {
    let den = guard(name, g.kd * m.g)?;
    let (s, _) = pid_surface(g, err);
    let u_eq = (g.ki * err.e + g.kp * err.e_dot + g.kd * (r_ddot - m.f)) / den;
    let u_sw = law.map_or(0.0, |l| -l.demand(s, 0.0) / den);
    let (u_eq, u_sw) = finish(name, u_eq, u_sw)?;
    let u = u_eq + u_sw;
    let pred = ErrorState { e_ddot: r_ddot - m.f - m.g * u, ..*err };
    let s_dot = pid_surface(g, &pred).1;
    let (v, v_dot) = lyapunov_diagnostics(s, s_dot, 0.0, 1);
    Ok(ControlOutput { u, u_eq, u_sw, s, s_dot, v, v_dot, ..Default::default() })
}

/// PID-surface SMC with a first-order reaching law (power-rate-exponential
/// in the reference scenarios).
pub fn pid_smc_control(
    err: &ErrorState,
    r_ddot: f64,
    m: &Affine,
    g: &SurfaceGains,
    law: &ReachingLawSpec,
) -> Result<ControlOutput, ControlError> {
    pid_family("pid_smc", err, r_ddot, m, g, Some(law))
}

/// s = ė + λe with an exponential (or other first-order) law.
pub fn classical_smc_control(
    err: &ErrorState,
    r_ddot: f64,
    m: &Affine,
    lambda: f64,
    law: &ReachingLawSpec,
) -> Result<ControlOutput, ControlError> {
    let den = guard("classical_smc", m.g)?;
    let sg = SurfaceGains { lambda, ..Default::default() };
    let s = lambda_surface(&sg, err, 2).map_err(|e| ControlError::Invalid(e.to_string()))?;
    let u_eq = (r_ddot - m.f + lambda * err.e_dot) / den;
    let u_sw = -law.demand(s, 0.0) / den;
    let (u_eq, u_sw) = finish("classical_smc", u_eq, u_sw)?;
    let u = u_eq + u_sw;
    let s_dot = (r_ddot - m.f - m.g * u) + lambda * err.e_dot;
    let (v, v_dot) = lyapunov_diagnostics(s, s_dot, 0.0, 1);
    Ok(ControlOutput { u, u_eq, u_sw, s, s_dot, v, v_dot, ..Default::default() })
}

/// Second-order SMC on the PI surface: s̈ follows the second-order law.
pub fn pi_2smc_control(
    err: &ErrorState,
    r_ddot: f64,
    m: &Affine,
    g: &SurfaceGains,
    law: &ReachingLawSpec,
) -> Result<ControlOutput, ControlError> {
    let den = guard("pi_2smc", g.kp * m.g)?;
    let (s, s_dot, _) = pi_surface(g, err);
    let u_eq = (g.kp * (r_ddot - m.f) + g.ki * err.e_dot) / den;
    let u_sw = -law.demand(s, s_dot) / den;
    let (u_eq, u_sw) = finish("pi_2smc", u_eq, u_sw)?;
    let u = u_eq + u_sw;
    let pred = ErrorState { e_ddot: r_ddot - m.f - m.g * u, ..*err };
    let s_ddot = pi_surface(g, &pred).2;
    let (v, v_dot) = lyapunov_diagnostics(s, s_dot, s_ddot, 2);
    Ok(ControlOutput { u, u_eq, u_sw, s, s_dot, v, v_dot, ..Default::default() })
}

/// First-order SMC on the PD surface s = Kp e + ė.
pub fn pd_smc_control(
    err: &ErrorState,
    r_ddot: f64,
    m: &Affine,
    kp: f64,
    law: &ReachingLawSpec,
) -> Result<ControlOutput, ControlError> {
    let den = guard("pd_smc", m.g)?;
    let sg = SurfaceGains { kp, ..Default::default() };
    let (s, _) = pd_surface(&sg, err);
    let u_eq = (r_ddot - m.f + kp * err.e_dot) / den;
    let u_sw = -law.demand(s, 0.0) / den;
    let (u_eq, u_sw) = finish("pd_smc", u_eq, u_sw)?;
    let u = u_eq + u_sw;
    let pred = ErrorState { e_ddot: r_ddot - m.f - m.g * u, ..*err };
    let s_dot = pd_surface(&sg, &pred).1;
    let (v, v_dot) = lyapunov_diagnostics(s, s_dot, 0.0, 1);
    Ok(ControlOutput { u, u_eq, u_sw, s, s_dot, v, v_dot, ..Default::default() })
}

/// PI-2SMC with the PD-SMC command fed back on the disagreement:
/// u = u_PI − γ (u_PI − u_PD).
#[allow(clippy::too_many_arguments)]
pub fn pi_pd_composite(
    err: &ErrorState,
    r_ddot: f64,
    m: &Affine,
    pi_gains: &SurfaceGains,
    pi_law: &ReachingLawSpec,
    pd_kp: f64,
    pd_law: &ReachingLawSpec,
    gamma: f64,
) -> Result<ControlOutput, ControlError> {
    let pi = pi_2smc_control(err, r_ddot, m, pi_gains, pi_law)?;
    let pd = pd_smc_control(err, r_ddot, m, pd_kp, pd_law)?;
    let u_eq = pi.u_eq - gamma * (pi.u_eq - pd.u_eq);
    let u_sw = pi.u_sw - gamma * (pi.u_sw - pd.u_sw);
    let (u_eq, u_sw) = finish("pi_pd_composite", u_eq, u_sw)?;
    let u = u_eq + u_sw;
    let pred = ErrorState { e_ddot: r_ddot - m.f - m.g * u, ..*err };
    let (s, s_dot, s_ddot) = pi_surface(pi_gains, &pred);
    let (v, v_dot) = lyapunov_diagnostics(s, s_dot, s_ddot, 2);
    Ok(ControlOutput {
        u,
        u_eq,
        u_sw,
        s,
        s_dot,
        v,
        v_dot,
        clipped: false,
        branches: Some((pi.u, pd.u)),
    })
}

/// First-order plant (ẏ = f + g u) with the PI surface: ṡ follows the law.
pub fn pi_smc_first_order(
    err: &ErrorState,
    r_dot: f64,
    m: &Affine,
    g: &SurfaceGains,
    law: Option<&ReachingLawSpec>,
) -> Result<ControlOutput, ControlError> {
    let den = guard("pi_smc", g.kp * m.g)?;
    let s = g.kp * err.e + g.ki * err.e_int;
    let u_eq = (g.kp * (r_dot - m.f) + g.ki * err.e) / den;
    let u_sw = law.map_or(0.0, |l| -l.demand(s, 0.0) / den);
    let (u_eq, u_sw) = finish("pi_smc", u_eq, u_sw)?;
    let u = u_eq + u_sw;
    let s_dot = g.kp * (r_dot - m.f - m.g * u) + g.ki * err.e;
    let (v, v_dot) = lyapunov_diagnostics(s, s_dot, 0.0, 1);
    Ok(ControlOutput { u, u_eq, u_sw, s, s_dot, v, v_dot, ..Default::default() })
}

/// Plain PID on the tracking error.
pub fn pid_baseline(err: &ErrorState, g: &SurfaceGains) -> ControlOutput {
    let u = g.kp * err.e + g.ki * err.e_int + g.kd * err.e_dot;
    let (s, s_dot) = pid_surface(g, err);
    let (v, v_dot) = lyapunov_diagnostics(s, s_dot, 0.0, 1);
    ControlOutput { u, u_eq: u, u_sw: 0.0, s, s_dot, v, v_dot, ..Default::default() }
}

/// V = s²/2 (order 1) or (s² + ṡ²)/2 (order 2), with its time derivative.
pub fn lyapunov_diagnostics(s: f64, s_dot: f64, s_ddot: f64, order: u32) -> (f64, f64) {
    if order == 2 {
        (0.5 * (s * s + s_dot * s_dot), s * s_dot + s_dot * s_ddot)
    } else {
        (0.5 * s * s, s * s_dot)
    }
}

impl ControllerSpec {
    pub fn new(kind: ControllerKind, surface: SurfaceGains, law: Option<ReachingLawSpec>) -> Self {
        Self { kind, surface, law, u_limit: None, gamma: 1.0, pd: None }
    }

    fn need_law(&self) -> Result<&ReachingLawSpec, ControlError> {
        self.law
            .as_ref()
            .ok_or_else(|| ControlError::Invalid(format!("{} needs a reaching law", self.kind.as_str())))
    }

    /// Structural checks: gains, law compatibility, limits.
    pub fn validate(&self, plant_order: usize) -> Result<(), ControlError> {
        let inv = |m: String| Err(ControlError::Invalid(m));
        let sk = self.kind.surface_kind(plant_order);
        self.surface.validate(sk).map_err(|e| ControlError::Invalid(e.to_string()))?;
        if plant_order == 1 && !matches!(self.kind, ControllerKind::PidSmc | ControllerKind::Equivalent | ControllerKind::Pid) {
            return inv(format!("{} needs a second-order plant", self.kind.as_str()));
        }
        if let Some(l) = &self.law {
            l.validate().map_err(|e| ControlError::Invalid(e.to_string()))?;
        }
        match self.kind {
            ControllerKind::Equivalent | ControllerKind::Pid => {
                if let Some(l) = &self.law {
                    if l.order() != 1 {
                        return inv("second-order law on a first-order surface".into());
                    }
                }
            }
            ControllerKind::PidSmc | ControllerKind::ClassicalSmc | ControllerKind::PdSmc => {
                if self.need_law()?.order() != 1 {
                    return inv(format!("{} needs a first-order reaching law", self.kind.as_str()));
                }
            }
            ControllerKind::Pi2smc | ControllerKind::PiPdComposite => {
                if self.need_law()?.variant != LawVariant::SecondOrderModified {
                    return inv(format!("{} needs the second_order_modified law", self.kind.as_str()));
                }
            }
        }
        if self.kind == ControllerKind::PiPdComposite {
            let pd = self
                .pd
                .as_ref()
                .ok_or_else(|| ControlError::Invalid("pi_pd_composite needs a [controller.pd] branch".into()))?;
            if !(pd.kp.is_finite() && pd.kp > 0.0) {
                return inv(format!("pd.kp must be positive, got {}", pd.kp));
            }
            pd.law.validate().map_err(|e| ControlError::Invalid(e.to_string()))?;
            if pd.law.order() != 1 {
                return inv("pd branch needs a first-order law".into());
            }
            if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
                return inv(format!("gamma must lie in [0, 1], got {}", self.gamma));
            }
        }
        if let Some(l) = self.u_limit {
            if !(l.is_finite() && l > 0.0) {
                return inv(format!("u_limit must be positive, got {l}"));
            }
        }
        Ok(())
    }

    /// Control at one instant. `m` is the nominal decomposition at the
    /// measured state, `r` the reference sample.
    pub fn compute(&self, err: &ErrorState, r: &RefSample, m: &Affine, plant_order: usize) -> Result<ControlOutput, ControlError> {
        let g = &self.surface;
        let mut out = if plant_order == 1 {
            match self.kind {
                ControllerKind::Pid => pid_baseline(err, g),
                _ => pi_smc_first_order(err, r.r_dot, m, g, self.law.as_ref())?,
            }
        } else {
            match self.kind {
                ControllerKind::Equivalent => pid_family("equivalent", err, r.r_ddot, m, g, self.law.as_ref())?,
                ControllerKind::PidSmc => pid_smc_control(err, r.r_ddot, m, g, self.need_law()?)?,
                ControllerKind::ClassicalSmc => classical_smc_control(err, r.r_ddot, m, g.lambda, self.need_law()?)?,
                ControllerKind::Pi2smc => pi_2smc_control(err, r.r_ddot, m, g, self.need_law()?)?,
                ControllerKind::PdSmc => pd_smc_control(err, r.r_ddot, m, g.kp, self.need_law()?)?,
                ControllerKind::PiPdComposite => {
                    let pd = self.pd.as_ref().ok_or_else(|| ControlError::Invalid("missing pd branch".into()))?;
                    pi_pd_composite(err, r.r_ddot, m, g, self.need_law()?, pd.kp, &pd.law, self.gamma)?
                }
                ControllerKind::Pid => pid_baseline(err, g),
            }
        };
        if let Some(lim) = self.u_limit {
            if out.u.abs() > lim {
                out.u = out.u.clamp(-lim, lim);
                out.u_sw = out.u - out.u_eq;
                out.clipped = true;
            }
        }
        Ok(out)
    }
}
