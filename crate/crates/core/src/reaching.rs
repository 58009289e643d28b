//! Reaching laws: the demanded ṡ (or s̈ for the second-order law).

use serde::{Deserialize, Serialize};

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_BOUNDARY: f64 = 0.05;

/// sign with sign(0) = 0.
#[inline]
pub fn sign(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Boundary-layer saturation: s/Δ inside the layer, ±1 outside.
#[inline]
pub fn sat(s: f64, delta: f64) -> f64 {
    if s > delta {
        1.0
    } else if s < -delta {
        -1.0
    } else {
        s / delta
    }
}

/// |s|^α, exactly 0 at s = 0.
#[inline]
pub fn pow_abs(s: f64, alpha: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        (alpha * s.abs().ln()).exp()
    }
}

pub fn constant_rate(s: f64, eps: f64) -> f64 {
    -eps * sign(s)
}

pub fn exponential_law(s: f64, eps: f64, k: f64) -> f64 {
    -eps * sign(s) - k * s
}

pub fn power_rate(s: f64, k: f64, alpha: f64) -> f64 {
    -k * pow_abs(s, alpha) * sign(s)
}

pub fn power_rate_exponential(s: f64, k: f64, k_sc: f64, alpha: f64, delta: f64) -> f64 {
    -k * s - k_sc * pow_abs(s, alpha) * sat(s, delta)
}

/// Demanded s̈ of the second-order law.
#[allow(clippy::too_many_arguments)]
pub fn second_order_modified(s: f64, s_dot: f64, k1: f64, k2: f64, eps1: f64, eps2: f64, alpha: f64) -> f64 {
    let p = pow_abs(s, alpha);
    -k1 * s_dot - k2 * s - eps1 * p * sign(s) - eps2 * p * sign(s_dot)
}

pub fn pd_modified(s: f64, k1: f64, eps1: f64, alpha: f64) -> f64 {
    -k1 * s - eps1 * pow_abs(s, alpha) * sign(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawVariant {
    ConstantRate,
    Exponential,
    PowerRate,
    PowerRateExponential,
    SecondOrderModified,
    PdModified,
}

impl LawVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            LawVariant::ConstantRate => "constant_rate",
            LawVariant::Exponential => "exponential",
            LawVariant::PowerRate => "power_rate",
            LawVariant::PowerRateExponential => "power_rate_exponential",
            LawVariant::SecondOrderModified => "second_order_modified",
            LawVariant::PdModified => "pd_modified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchFn {
    Sign,
    Sat,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("reaching law {variant}: {msg}")]
pub struct LawError {
    pub variant: &'static str,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachingLawSpec {
    pub variant: LawVariant,
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub k_sc: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
    #[serde(default)]
    pub eps1: f64,
    #[serde(default)]
    pub eps2: f64,
    #[serde(default = "default_boundary")]
    pub boundary_width: f64,
    /// Defaults to `sat` for power_rate_exponential and `sign` otherwise.
    #[serde(default)]
    pub switch_fn: Option<SwitchFn>,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_boundary() -> f64 {
    DEFAULT_BOUNDARY
}

impl ReachingLawSpec {
    pub fn new(variant: LawVariant) -> Self {
        Self {
            variant,
            eps: 0.0,
            k: 0.0,
            k_sc: 0.0,
            alpha: DEFAULT_ALPHA,
            k1: 0.0,
            k2: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            boundary_width: DEFAULT_BOUNDARY,
            switch_fn: None,
        }
    }

    pub fn exponential(eps: f64, k: f64) -> Self {
        Self { eps, k, ..Self::new(LawVariant::Exponential) }
    }

    pub fn power_rate_exponential(k: f64, k_sc: f64, alpha: f64) -> Self {
        Self { k, k_sc, alpha, ..Self::new(LawVariant::PowerRateExponential) }
    }

    pub fn second_order(k1: f64, k2: f64, eps1: f64, eps2: f64, alpha: f64) -> Self {
        Self { k1, k2, eps1, eps2, alpha, ..Self::new(LawVariant::SecondOrderModified) }
    }

    pub fn pd_modified(k1: f64, eps1: f64, alpha: f64) -> Self {
        Self { k1, eps1, alpha, ..Self::new(LawVariant::PdModified) }
    }

    pub fn switch(&self) -> SwitchFn {
        self.switch_fn.unwrap_or(match self.variant {
            LawVariant::PowerRateExponential => SwitchFn::Sat,
            _ => SwitchFn::Sign,
        })
    }

    fn sw(&self, s: f64) -> f64 {
        match self.switch() {
            SwitchFn::Sign => sign(s),
            SwitchFn::Sat => sat(s, self.boundary_width),
        }
    }

    /// 1 when the law prescribes ṡ, 2 when it prescribes s̈.
    pub fn order(&self) -> u32 {
        match self.variant {
            LawVariant::SecondOrderModified => 2,
            _ => 1,
        }
    }

    /// Demanded ṡ, or s̈ for the second-order variant.
    pub fn demand(&self, s: f64, s_dot: f64) -> f64 {
        let p = pow_abs(s, self.alpha);
        match self.variant {
            LawVariant::ConstantRate => -self.eps * self.sw(s),
            LawVariant::Exponential => -self.eps * self.sw(s) - self.k * s,
            LawVariant::PowerRate => -self.k * p * self.sw(s),
            LawVariant::PowerRateExponential => -self.k * s - self.k_sc * p * self.sw(s),
            LawVariant::SecondOrderModified => {
                -self.k1 * s_dot - self.k2 * s - self.eps1 * p * self.sw(s) - self.eps2 * p * self.sw(s_dot)
            }
            LawVariant::PdModified => -self.k1 * s - self.eps1 * p * self.sw(s),
        }
    }

    /// The switching (discontinuous or boundary-layer) part of `demand`.
    pub fn switching_part(&self, s: f64, s_dot: f64) -> f64 {
        let p = pow_abs(s, self.alpha);
        match self.variant {
            LawVariant::ConstantRate | LawVariant::Exponential => -self.eps * self.sw(s),
            LawVariant::PowerRate => -self.k * p * self.sw(s),
            LawVariant::PowerRateExponential => -self.k_sc * p * self.sw(s),
            LawVariant::SecondOrderModified => -self.eps1 * p * self.sw(s) - self.eps2 * p * self.sw(s_dot),
            LawVariant::PdModified => -self.eps1 * p * self.sw(s),
        }
    }

    pub fn validate(&self) -> Result<(), LawError> {
        let v = self.variant.as_str();
        let bad = |msg: String| Err(LawError { variant: v, msg });
        let pos = |name: &str, x: f64| -> Result<(), LawError> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(LawError { variant: v, msg: format!("{name} must be positive, got {x}") })
            }
        };
        match self.variant {
            LawVariant::ConstantRate => pos("eps", self.eps)?,
            LawVariant::Exponential => {
                pos("eps", self.eps)?;
                pos("k", self.k)?;
            }
            LawVariant::PowerRate => {
                pos("k", self.k)?;
                if !(self.alpha > 0.0 && self.alpha < 1.0) {
                    return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
                }
            }
            LawVariant::PowerRateExponential => {
                pos("k", self.k)?;
                pos("k_sc", self.k_sc)?;
            }
            LawVariant::SecondOrderModified => {
                pos("k1", self.k1)?;
                pos("k2", self.k2)?;
                pos("eps1", self.eps1)?;
                pos("eps2", self.eps2)?;
            }
            LawVariant::PdModified => {
                pos("k1", self.k1)?;
                pos("eps1", self.eps1)?;
            }
        }
        if !(0.0..=2.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 2], got {}", self.alpha));
        }
        if self.switch() == SwitchFn::Sat {
            pos("boundary_width", self.boundary_width)?;
        }
        Ok(())
    }
}
