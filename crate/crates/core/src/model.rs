//! Model parameters, sink laws, and the spectral variables.
//!
//! The model is one-dimensional drift-diffusion in the V-shaped potential
//! `U(x) = omega*|x|` (drift speed `omega*D` pointing toward the origin from
//! both sides) with a point sink at the origin whose strength `k(t)` may
//! depend on time:
//!
//! ```text
//!     dP/dt = D d/dx ( dP/dx + omega*sgn(x)*P ) + 2*sigma*k(t)*delta(x)*P
//! ```
//!
//! `sigma = -1` is the physically absorbing sink; `sigma = +1` keeps the
//! sign convention of the transcribed source formulas (see `fidelity`).
//!
//! In the Laplace domain all solutions are built from two spectral
//! quantities: `q = omega/2` and `p(s) = sqrt(q^2 + s/D)` (principal
//! branch). `Re p > 0` wherever `q^2 + s/D` lies off the negative real
//! axis, and `p(0) = q` recovers the bound equilibrium mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diffusion constant, potential slope, and sink sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Diffusion constant `D > 0`.
    pub d: f64,
    /// Potential slope `omega >= 0`; `omega = 0` degenerates to free diffusion.
    pub omega: f64,
    /// Sink sign, `-1` (absorbing) or `+1` (transcribed convention).
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(d: f64, omega: f64, sigma: f64) -> Result<Self> {
        let p = ModelParams { d, omega, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.d.is_finite() || self.d <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "params.d must be finite and > 0, got {}",
                self.d
            )));
        }
        if !self.omega.is_finite() || self.omega < 0.0 {
            return Err(Error::InvalidInput(format!(
                "params.omega must be finite and >= 0, got {}",
                self.omega
            )));
        }
        if self.sigma != 1.0 && self.sigma != -1.0 {
            return Err(Error::InvalidInput(format!(
                "params.sigma must be exactly +1 or -1, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Half-slope `q = omega/2`, the decay rate of the equilibrium density.
    pub fn q(&self) -> f64 {
        self.omega / 2.0
    }

    /// Relaxation time `1/(D q^2)` of the slowest mode (infinite if `omega = 0`).
    pub fn t_relax(&self) -> f64 {
        let q = self.q();
        if q == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (self.d * q * q)
        }
    }
}

/// Spectral variables `q` and `p(s)` entering every Laplace-domain formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralVars {
    pub q: f64,
    pub p: Complex64,
    pub s: Complex64,
}

/// Admissibility check for a Laplace variable.
///
/// `s` must be finite and nonzero. Real `s` must be positive: the segment
/// `s <= -D q^2` is the continuous spectrum (branch cut of `p`), the
/// remaining negative axis holds the `s = 0` pole of the conserved mode,
/// and transform inversion never needs real non-positive `s`. Complex `s`
/// off the real axis is admissible — deformed inversion contours (Talbot)
/// evaluate there, where all formulas continue analytically.
pub fn check_laplace_point(s: Complex64) -> Result<()> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::BadLaplacePoint(format!("{}", s), "non-finite"));
    }
    if s == Complex64::new(0.0, 0.0) {
        return Err(Error::BadLaplacePoint(
            format!("{}", s),
            "s = 0 is the conserved-mode pole",
        ));
    }
    if s.im == 0.0 && s.re <= 0.0 {
        return Err(Error::BadLaplacePoint(
            format!("{}", s),
            "real s must be positive (branch cut / spectrum)",
        ));
    }
    Ok(())
}

/// Compute `q` and the principal branch `p(s) = sqrt(q^2 + s/D)`.
///
/// Guarantees `Re p >= 0`; for `Re s > 0` strictly `Re p > q >= 0`.
pub fn spectral(params: &ModelParams, s: Complex64) -> Result<SpectralVars> {
    params.validate()?;
    check_laplace_point(s)?;
    let q = params.q();
    let p = (Complex64::new(q * q, 0.0) + s / params.d).sqrt();
    Ok(SpectralVars { q, p, s })
}

/// Time-dependent sink strength law `k(t)`.
///
/// All laws keep `k` finite on `t >= 0`; the inverse-time law is gated by
/// `t_on > 0` below which it is switched off, which is what makes the
/// time-domain problem well-posed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum SinkSpec {
    /// No sink at all; identical to `Constant { alpha0: 0 }`.
    NoSink,
    /// `k(t) = alpha0`.
    Constant { alpha0: f64 },
    /// `k(t) = alpha1 * t`. Either sign of `alpha1` is expressible; only
    /// net-absorbing combinations admit a Laplace-domain solution.
    Linear { alpha1: f64 },
    /// `k(t) = alpha / t` for `t >= t_on`, zero before.
    InverseTime { alpha: f64, t_on: f64 },
    /// `k(t) = beta * exp(-alpha_decay * t)`, `alpha_decay > 0`.
    ExpDecay { beta: f64, alpha_decay: f64 },
}

impl SinkSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SinkSpec::NoSink => Ok(()),
            SinkSpec::Constant { alpha0 } => {
                if !alpha0.is_finite() || alpha0 < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "sink.alpha0 must be finite and >= 0, got {alpha0}"
                    )));
                }
                Ok(())
            }
            SinkSpec::Linear { alpha1 } => {
                if !alpha1.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "sink.alpha1 must be finite, got {alpha1}"
                    )));
                }
                Ok(())
            }
            SinkSpec::InverseTime { alpha, t_on } => {
                if !alpha.is_finite() || alpha < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "sink.alpha must be finite and >= 0, got {alpha}"
                    )));
                }
                if !t_on.is_finite() || t_on <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "sink.t_on must be finite and > 0, got {t_on}"
                    )));
                }
                Ok(())
            }
            SinkSpec::ExpDecay { beta, alpha_decay } => {
                if !beta.is_finite() || beta < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "sink.beta must be finite and >= 0, got {beta}"
                    )));
                }
                if !alpha_decay.is_finite() || alpha_decay <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "sink.alpha_decay must be finite and > 0 (use the constant law for a \
                         non-decaying sink), got {alpha_decay}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Evaluate `k(t)`. Requires `t >= 0`.
    pub fn strength(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "sink strength queried at negative time");
        match *self {
            SinkSpec::NoSink => 0.0,
            SinkSpec::Constant { alpha0 } => alpha0,
            SinkSpec::Linear { alpha1 } => alpha1 * t,
            SinkSpec::InverseTime { alpha, t_on } => {
                if t >= t_on {
                    alpha / t
                } else {
                    0.0
                }
            }
            SinkSpec::ExpDecay { beta, alpha_decay } => beta * (-alpha_decay * t).exp(),
        }
    }

    /// True when `k` is identically zero.
    pub fn is_trivial(&self) -> bool {
        match *self {
            SinkSpec::NoSink => true,
            SinkSpec::Constant { alpha0 } => alpha0 == 0.0,
            SinkSpec::Linear { alpha1 } => alpha1 == 0.0,
            SinkSpec::InverseTime { alpha, .. } => alpha == 0.0,
            SinkSpec::ExpDecay { beta, .. } => beta == 0.0,
        }
    }

    /// Default onset time for the inverse-time law: `0.01` in units of the
    /// relaxation time `1/(D q^2)`, or absolute `0.01` for free diffusion.
    pub fn default_t_on(params: &ModelParams) -> f64 {
        let tr = params.t_relax();
        if tr.is_finite() {
            0.01 * tr
        } else {
            0.01
        }
    }
}

/// Initial condition: a unit point mass released at `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub x0: f64,
}

impl InitialCondition {
    pub fn new(x0: f64) -> Result<Self> {
        if !x0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "initial.x0 must be finite, got {x0}"
            )));
        }
        Ok(InitialCondition { x0 })
    }
}
