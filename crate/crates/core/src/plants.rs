//! Control-affine plant models.
//!
//! Every plant is written as `x_n^(n) = f(x) + g(x) u + d(t)`. The nominal
//! `(f, g)` pair is what the controllers see; the simulator integrates the
//! true plant, which may differ by a parameter perturbation and an additive
//! model uncertainty.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Minimum tank level in cm. Below this the cross-section vanishes and the
/// model is frozen at the floor.
pub const TANK_H_MIN: f64 = 0.1;

/// 1 L/h expressed in cm³/s.
pub const LPH_TO_CM3S: f64 = 1000.0 / 3600.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("pendulum decomposition is singular: D = {0:e}")]
    SingularDenominator(f64),
    #[error("tank level {0} cm is below the floor {TANK_H_MIN} cm")]
    DegenerateLevel(f64),
    #[error("non-finite state component")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumParams {
    /// M, kg
    #[serde(default = "PendulumParams::d_cart")]
    pub cart_mass: f64,
    /// m, kg
    #[serde(default = "PendulumParams::d_pend")]
    pub pend_mass: f64,
    /// I, kg·m²
    #[serde(default = "PendulumParams::d_inertia")]
    pub inertia: f64,
    /// l, m (pivot to centre of mass)
    #[serde(default = "PendulumParams::d_length")]
    pub length: f64,
    #[serde(default = "PendulumParams::d_gravity")]
    pub gravity: f64,
    /// Cart friction. Listed for completeness; the affine model assumes 0.
    #[serde(default)]
    pub friction: f64,
}

impl PendulumParams {
    fn d_cart() -> f64 {
        1.0
    }
    fn d_pend() -> f64 {
        0.1
    }
    fn d_inertia() -> f64 {
        0.006
    }
    fn d_length() -> f64 {
        0.3
    }
    fn d_gravity() -> f64 {
        9.8
    }
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pend_mass: 0.1,
            inertia: 0.006,
            length: 0.3,
            gravity: 9.8,
            friction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanDerPolParams {
    #[serde(default = "VanDerPolParams::d_stiff")]
    pub stiffness: f64,
    #[serde(default = "VanDerPolParams::d_damp")]
    pub damping_gain: f64,
}

impl VanDerPolParams {
    fn d_stiff() -> f64 {
        2.0
    }
    fn d_damp() -> f64 {
        3.0
    }
}

impl Default for VanDerPolParams {
    fn default() -> Self {
        Self {
            stiffness: 2.0,
            damping_gain: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankParams {
    /// R, cm
    #[serde(default = "TankParams::d_radius")]
    pub top_radius: f64,
    /// H, cm
    #[serde(default = "TankParams::d_height")]
    pub max_height: f64,
    /// k, cm^2.5/s
    #[serde(default = "TankParams::d_k")]
    pub discharge_coeff: f64,
    /// L/h
    #[serde(default = "TankParams::d_fin")]
    pub max_inflow: f64,
}

impl TankParams {
    fn d_radius() -> f64 {
        17.5
    }
    fn d_height() -> f64 {
        70.0
    }
    fn d_k() -> f64 {
        55.0
    }
    fn d_fin() -> f64 {
        400.0
    }

    pub fn area(&self, h: f64) -> f64 {
        std::f64::consts::PI * self.top_radius * self.top_radius * h * h
            / (self.max_height * self.max_height)
    }
}

impl Default for TankParams {
    fn default() -> Self {
        Self {
            top_radius: 17.5,
            max_height: 70.0,
            discharge_coeff: 55.0,
            max_inflow: 400.0,
        }
    }
}

/// Drift and input gain at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub f: f64,
    pub g: f64,
}

/// Inverted pendulum on a cart, θ in rad. The cart force u enters through `ml cosθ`.
pub fn pendulum_decompose(theta: f64, theta_dot: f64, p: &PendulumParams) -> Result<Affine, PlantError> {
    if !theta.is_finite() || !theta_dot.is_finite() {
        return Err(PlantError::NonFinite);
    }
    let ml = p.pend_mass * p.length;
    let (s, c) = theta.sin_cos();
    let d = ml * ml * c * c - (p.inertia + p.pend_mass * p.length * p.length);
    if d.abs() < 1e-12 {
        return Err(PlantError::SingularDenominator(d));
    }
    let f = (p.pend_mass * p.gravity * p.length * s - ml * ml * c * s * theta_dot * theta_dot) / d;
    let g = ml * c / d;
    Ok(Affine { f, g })
}

pub fn vdp_decompose(x1: f64, x2: f64, p: &VanDerPolParams) -> Result<Affine, PlantError> {
    if !x1.is_finite() || !x2.is_finite() {
        return Err(PlantError::NonFinite);
    }
    Ok(Affine {
        f: -p.stiffness * x1 + p.damping_gain * (1.0 - x1 * x1) * x2,
        g: 1.0,
    })
}

/// Conical tank, level h in cm. The input is the inflow in L/h.
pub fn tank_decompose(h: f64, p: &TankParams) -> Result<Affine, PlantError> {
    if !h.is_finite() {
        return Err(PlantError::NonFinite);
    }
    if h < TANK_H_MIN {
        return Err(PlantError::DegenerateLevel(h));
    }
    let a = p.area(h);
    Ok(Affine {
        f: -p.discharge_coeff * h.sqrt() / a,
        g: LPH_TO_CM3S / a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Plant {
    Pendulum(PendulumParams),
    VanDerPol(VanDerPolParams),
    Tank(TankParams),
}

impl Plant {
    /// Number of state components (1 for the tank, 2 otherwise).
    pub fn order(&self) -> usize {
        match self {
            Plant::Tank(_) => 1,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Plant::Pendulum(_) => "pendulum",
            Plant::VanDerPol(_) => "van_der_pol",
            Plant::Tank(_) => "tank",
        }
    }

    /// `(f, g)` at state `x`. For the tank only `x[0]` is read.
    pub fn decompose(&self, x: [f64; 2]) -> Result<Affine, PlantError> {
        match self {
            Plant::Pendulum(p) => pendulum_decompose(x[0], x[1], p),
            Plant::VanDerPol(p) => vdp_decompose(x[0], x[1], p),
            Plant::Tank(p) => tank_decompose(x[0].max(TANK_H_MIN), p),
        }
    }

    /// State derivative under input `u`, with `extra` added to the highest
    /// derivative (disturbance plus uncertainty). The tank level is frozen at
    /// the floor and at the brim when the flow would push it past either.
    pub fn derivative(&self, x: [f64; 2], u: f64, extra: f64) -> Result<[f64; 2], PlantError> {
        let a = self.decompose(x)?;
        let top = a.f + a.g * u + extra;
        match self {
            Plant::Tank(p) => {
                let h = x[0];
                let dh = if (h <= TANK_H_MIN && top < 0.0) || (h >= p.max_height && top > 0.0) {
                    0.0
                } else {
                    top
                };
                Ok([dh, 0.0])
            }
            _ => Ok([x[1], top]),
        }
    }

    /// Keeps the state inside the physical range after an integration step.
    pub fn project(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Plant::Tank(p) => [x[0].clamp(TANK_H_MIN, p.max_height), 0.0],
            _ => x,
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Plant::Pendulum(_) => &["cart_mass", "pend_mass", "inertia", "length", "gravity", "friction"],
            Plant::VanDerPol(_) => &["stiffness", "damping_gain"],
            Plant::Tank(_) => &["top_radius", "max_height", "discharge_coeff", "max_inflow"],
        }
    }

    fn param_mut(&mut self, name: &str) -> Option<&mut f64> {
        match self {
            Plant::Pendulum(p) => match name {
                "cart_mass" => Some(&mut p.cart_mass),
                "pend_mass" => Some(&mut p.pend_mass),
                "inertia" => Some(&mut p.inertia),
                "length" => Some(&mut p.length),
                "gravity" => Some(&mut p.gravity),
                "friction" => Some(&mut p.friction),
                _ => None,
            },
            Plant::VanDerPol(p) => match name {
                "stiffness" => Some(&mut p.stiffness),
                "damping_gain" => Some(&mut p.damping_gain),
                _ => None,
            },
            Plant::Tank(p) => match name {
                "top_radius" => Some(&mut p.top_radius),
                "max_height" => Some(&mut p.max_height),
                "discharge_coeff" => Some(&mut p.discharge_coeff),
                "max_inflow" => Some(&mut p.max_inflow),
                _ => None,
            },
        }
    }

    /// Copy with each named parameter scaled by `1 + fraction`.
    pub fn perturbed(&self, fractions: &BTreeMap<String, f64>) -> Result<Plant, String> {
        let mut out = *self;
        for (name, frac) in fractions {
            match out.param_mut(name) {
                Some(v) => *v *= 1.0 + frac,
                None => return Err(format!("{} has no parameter `{name}`", self.name())),
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("plant.{name} must be positive, got {v}"))
            }
        };
        match self {
            Plant::Pendulum(p) => {
                positive("cart_mass", p.cart_mass)?;
                positive("pend_mass", p.pend_mass)?;
                positive("inertia", p.inertia)?;
                positive("length", p.length)?;
                positive("gravity", p.gravity)?;
                if p.friction != 0.0 {
                    return Err("plant.friction: only frictionless carts are modelled".into());
                }
            }
            Plant::VanDerPol(p) => {
                if !p.stiffness.is_finite() || !p.damping_gain.is_finite() {
                    return Err("plant parameters must be finite".into());
                }
            }
            Plant::Tank(p) => {
                positive("top_radius", p.top_radius)?;
                positive("max_height", p.max_height)?;
                positive("discharge_coeff", p.discharge_coeff)?;
                positive("max_inflow", p.max_inflow)?;
            }
        }
        Ok(())
    }
}

/// Additive model uncertainty `amplitude · sin(omega · t)` on the true drift.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Uncertainty {
    pub amplitude: f64,
    #[serde(default = "one")]
    pub angular_freq: f64,
}

fn one() -> f64 {
    1.0
}

impl Uncertainty {
    pub fn at(&self, t: f64) -> f64 {
        self.amplitude * (self.angular_freq * t).sin()
    }
}
