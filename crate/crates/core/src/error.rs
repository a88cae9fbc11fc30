//! Error type shared by all solver modules.

use thiserror::Error;

/// Everything that can go wrong while building or evaluating a solution.
///
/// Variants are deliberately fine-grained: callers (CLI, demo, tests)
/// distinguish "your inputs are bad" from "the numerics gave up", and the
/// latter carries enough context to adjust tolerances or grids.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Parameter or grid validation failed before any computation started.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A Laplace variable outside the admissible region was supplied
    /// (`s = 0`, on the spectral branch cut, or non-positive real axis).
    #[error("laplace variable s = {0} is outside the admissible region: {1}")]
    BadLaplacePoint(String, &'static str),

    /// The transcribed-form denominator `p + q - omega` vanished; the
    /// transcribed origin amplitude has a spurious pole there.
    #[error("transcribed-form pole: |p + q - omega| = {0:.3e} at s = {1}")]
    TranscribedPole(f64, String),

    /// The constant-law closure denominator `1 - 2 sigma alpha0 G(0,s|0)`
    /// vanished (a resonance of the gain-sign problem).
    #[error("closure resonance: |denominator| = {0:.3e} at s = {1}")]
    ClosureResonance(f64, String),

    /// Linear system for the piecewise Green's function was singular.
    #[error("green-function system singular at s = {0}")]
    SingularSystem(String),

    /// Backward integration in s is unstable for this sign combination
    /// (probability-pumping sink); the Laplace-domain problem is ill-posed.
    #[error("ill-posed backward problem: {0}")]
    IllPosedBackward(String),

    /// The tail estimate for the auxiliary integral did not converge
    /// (slow decay, e.g. x0 = 0 for the inverse-time law).
    #[error("auxiliary tail does not converge: {0}")]
    TailDivergence(String),

    /// The shift series for the exponential-decay law failed to meet the
    /// tail tolerance within the allowed depth.
    #[error("shift series not converged: depth {depth}, tail bound {tail_bound:.3e} > {tail_tol:.3e}")]
    SeriesNotConverged {
        depth: usize,
        tail_bound: f64,
        tail_tol: f64,
    },

    /// Adaptive ODE stepping could not satisfy the tolerance.
    #[error("ode stepping failed: {0}")]
    OdeFailure(String),

    /// A function handed to an inverse-transform returned a non-finite value.
    #[error("non-finite transform value at node {0}")]
    NonFiniteTransform(String),

    /// Numeric Laplace quadrature was asked to transform a series whose
    /// window is too short for the requested s (tail not negligible).
    #[error("time window too short: s*t_max = {0:.3} < {1:.3}")]
    InsufficientWindow(f64, f64),

    /// An `OriginResponse` was combined with parameters other than the ones
    /// it was computed from.
    #[error("origin response does not match the supplied (s, params, x0) context")]
    ContextMismatch,

    /// Catch-all for solver-level numerical failures.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the command-line driver maps this error to:
    /// 2 for configuration/validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::BadLaplacePoint(..) | Error::ContextMismatch => 2,
            _ => 3,
        }
    }
}
