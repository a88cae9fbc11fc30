//! Physical observables derived from solutions: survival probability,
//! sink flux, effective rate, equilibrium profile.
//!
//! In the Laplace domain the survival integral collapses to closed form:
//! integrating the field uses `int exp(-(p+q)|x|) dx = 2/(p+q)` for the
//! homogeneous mode and `1/s` for the conserved source part, which
//! together reduce to
//!
//! ```text
//!     S(s) = (1 + 2 sigma L[k P(0,.)](s)) / s,
//! ```
//!
//! the transform of the flux balance `dS/dt = sigma 2 k(t) P(0,t)`.

use num_complex::Complex64;

use crate::closure::OriginResponse;
use crate::error::{Error, Result};
use crate::model::{ModelParams, SinkSpec};

/// Which route produced a survival curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    AnalyticIlt,
    CrankNicolson,
    MonteCarlo,
    VolterraAssisted,
}

/// A survival curve with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub source: SourceTag,
}

impl SurvivalCurve {
    /// Check the basic survival invariants: `S(0) = 1` when the grid
    /// starts at zero, `0 <= S <= 1 + 1e-6`, and (for an absorbing sink)
    /// monotone decay within ringing tolerance.
    pub fn check_invariants(&self, sigma: f64, sink_nonnegative: bool) -> Result<()> {
        if self.t.len() != self.s.len() || self.t.is_empty() {
            return Err(Error::InvalidInput(
                "survival curve needs matching nonempty t and S".into(),
            ));
        }
        if self.t[0] == 0.0 && (self.s[0] - 1.0).abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "survival must start at 1, got S(0) = {}",
                self.s[0]
            )));
        }
        for (&t, &s) in self.t.iter().zip(&self.s) {
            if !((-1e-6..=1.0 + 1e-6).contains(&s)) && sigma < 0.0 {
                return Err(Error::Numerical(format!(
                    "survival out of [0, 1] at t = {t}: S = {s}"
                )));
            }
        }
        if sigma < 0.0 && sink_nonnegative {
            for w in self.s.windows(2) {
                if w[1] > w[0] + 1e-6 {
                    return Err(Error::Numerical(format!(
                        "survival increased under an absorbing sink: {} -> {}",
                        w[0], w[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Laplace-domain survival `S(s) = (1 + 2 sigma sink_lap) / s` from an
/// origin response.
pub fn survival_laplace(params: &ModelParams, resp: &OriginResponse) -> Complex64 {
    (1.0 + 2.0 * params.sigma * resp.sink_lap) / resp.s
}

/// Sink flux `J(t) = 2 k(t) P(0,t)` from an origin series.
pub fn sink_flux(sink: &SinkSpec, t: &[f64], origin: &[f64]) -> Result<Vec<f64>> {
    if t.len() != origin.len() {
        return Err(Error::InvalidInput(format!(
            "sink_flux needs matching grids: {} times vs {} origin values",
            t.len(),
            origin.len()
        )));
    }
    Ok(t.iter()
        .zip(origin)
        .map(|(&ti, &pi)| 2.0 * sink.strength(ti) * pi)
        .collect())
}

/// Effective rate `k_eff(t) = J(t)/S(t)`, reported as NaN once the
/// survival drops below 1e-6 (the ratio is no longer meaningful there).
pub fn effective_rate(flux: &[f64], survival: &[f64]) -> Result<Vec<f64>> {
    if flux.len() != survival.len() {
        return Err(Error::InvalidInput(
            "effective_rate needs matching flux and survival series".into(),
        ));
    }
    Ok(flux
        .iter()
        .zip(survival)
        .map(|(&j, &s)| if s > 1e-6 { j / s } else { f64::NAN })
        .collect())
}

/// Normalized Boltzmann profile `(omega/2) exp(-omega |x|)` of the V
/// potential; rejected for `omega = 0` (no normalizable equilibrium).
pub fn equilibrium_profile(params: &ModelParams, x: f64) -> Result<f64> {
    params.validate()?;
    if params.omega <= 0.0 {
        return Err(Error::InvalidInput(
            "no normalizable equilibrium for omega = 0 (free diffusion)".into(),
        ));
    }
    Ok(0.5 * params.omega * (-params.omega * x.abs()).exp())
}
