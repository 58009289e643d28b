//! Sliding surfaces and tracking-error bookkeeping.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("lambda surface supports order 2 or 3, got {0}")]
    UnsupportedOrder(u32),
    #[error("surface gain {name} must be positive and finite, got {value}")]
    InvalidGain { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceGains {
    #[serde(default)]
    pub kp: f64,
    #[serde(default)]
    pub ki: f64,
    #[serde(default)]
    pub kd: f64,
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Pid,
    Pi,
    Pd,
    Lambda,
}

impl SurfaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurfaceKind::Pid => "pid",
            SurfaceKind::Pi => "pi",
            SurfaceKind::Pd => "pd",
            SurfaceKind::Lambda => "lambda",
        }
    }
}

impl SurfaceGains {
    pub fn pid(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd, lambda: 0.0 }
    }

    /// Checks that the gains used by `kind` are strictly positive.
    pub fn validate(&self, kind: SurfaceKind) -> Result<(), SurfaceError> {
        let need: &[(&'static str, f64)] = match kind {
            SurfaceKind::Pid => &[("kp", self.kp), ("ki", self.ki), ("kd", self.kd)],
            SurfaceKind::Pi => &[("kp", self.kp), ("ki", self.ki)],
            SurfaceKind::Pd => &[("kp", self.kp)],
            SurfaceKind::Lambda => &[("lambda", self.lambda)],
        };
        for &(name, value) in need {
            if !(value.is_finite() && value > 0.0) {
                return Err(SurfaceError::InvalidGain { name, value });
            }
        }
        Ok(())
    }
}

/// Tracking error e = r − y and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState {
    pub e: f64,
    pub e_dot: f64,
    pub e_int: f64,
    pub e_ddot: f64,
}

impl ErrorState {
    pub fn scale(self, a: f64) -> Self {
        Self {
            e: a * self.e,
            e_dot: a * self.e_dot,
            e_int: a * self.e_int,
            e_ddot: a * self.e_ddot,
        }
    }

    pub fn add(self, o: Self) -> Self {
        Self {
            e: self.e + o.e,
            e_dot: self.e_dot + o.e_dot,
            e_int: self.e_int + o.e_int,
            e_ddot: self.e_ddot + o.e_ddot,
        }
    }
}

/// Reference value and its first two analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RefSample {
    pub r: f64,
    pub r_dot: f64,
    pub r_ddot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    Constant { value: f64 },
    Sinusoid { amplitude: f64, angular_freq: f64 },
}

impl Default for Reference {
    fn default() -> Self {
        Reference::Constant { value: 0.0 }
    }
}

impl Reference {
    pub fn at(&self, t: f64) -> RefSample {
        match *self {
            Reference::Constant { value } => RefSample { r: value, r_dot: 0.0, r_ddot: 0.0 },
            Reference::Sinusoid { amplitude: a, angular_freq: w } => {
                let (s, c) = (w * t).sin_cos();
                RefSample {
                    r: a * s,
                    r_dot: a * w * c,
                    r_ddot: -a * w * w * s,
                }
            }
        }
    }
}

/// s = Kp e + Kd ė + Ki ∫e, ṡ = Ki e + Kp ė + Kd ë.
pub fn pid_surface(g: &SurfaceGains, err: &ErrorState) -> (f64, f64) {
    let s = g.kp * err.e + g.kd * err.e_dot + g.ki * err.e_int;
    let s_dot = g.ki * err.e + g.kp * err.e_dot + g.kd * err.e_ddot;
    (s, s_dot)
}

/// s = Kp e + Ki ∫e with its first two derivatives.
pub fn pi_surface(g: &SurfaceGains, err: &ErrorState) -> (f64, f64, f64) {
    let s = g.kp * err.e + g.ki * err.e_int;
    let s_dot = g.kp * err.e_dot + g.ki * err.e;
    let s_ddot = g.kp * err.e_ddot + g.ki * err.e_dot;
    (s, s_dot, s_ddot)
}

/// s = Kp e + ė (derivative gain fixed at 1).
pub fn pd_surface(g: &SurfaceGains, err: &ErrorState) -> (f64, f64) {
    (g.kp * err.e + err.e_dot, g.kp * err.e_dot + err.e_ddot)
}

/// (d/dt + λ)^(n−1) e for n = 2 or 3.
pub fn lambda_surface(g: &SurfaceGains, err: &ErrorState, order: u32) -> Result<f64, SurfaceError> {
    let l = g.lambda;
    match order {
        2 => Ok(err.e_dot + l * err.e),
        3 => Ok(err.e_ddot + 2.0 * l * err.e_dot + l * l * err.e),
        n => Err(SurfaceError::UnsupportedOrder(n)),
    }
}

/// Rate of the order-2 λ surface: ë + λė.
pub fn lambda_surface_rate(g: &SurfaceGains, err: &ErrorState) -> f64 {
    err.e_ddot + g.lambda * err.e_dot
}

/// True when Kd r² + Kp r + Ki has both roots in the open left half plane.
pub fn pid_is_hurwitz(g: &SurfaceGains) -> bool {
    let (a, b, c) = (g.kd, g.kp, g.ki);
    if a == 0.0 {
        return b != 0.0 && -c / b < 0.0;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        -b / (2.0 * a) < 0.0
    } else {
        let sq = disc.sqrt();
        let r1 = (-b + sq) / (2.0 * a);
        let r2 = (-b - sq) / (2.0 * a);
        r1 < 0.0 && r2 < 0.0
    }
}
