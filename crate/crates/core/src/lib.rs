//! Drift-diffusion in a V-shaped potential with a time-dependent point
//! sink at the origin, solved in the Laplace domain and cross-validated
//! against independent time-domain solvers.
//!
//! The model is
//!
//! ```text
//!     dP/dt = D d/dx ( dP/dx + omega sgn(x) P ) + 2 sigma k(t) delta(x) P
//! ```
//!
//! for a unit point mass released at `x0`. In the Laplace domain the
//! solution is a Green's function plus an origin-localized response whose
//! amplitude is fixed by a closure relation
//!
//! ```text
//!     P(0,s) = G(0,s|x0) + 2 sigma G(0,s|0) L[k P(0,.)](s)
//! ```
//!
//! solved per sink law in [`closure`]. Time-domain answers come from
//! numerical transform inversion ([`ilt`]). Correctness is adjudicated by
//! three mutually independent routes: the Laplace-domain solution, a
//! Volterra integral solver built on closed-form time-domain propagators
//! ([`volterra`]), and a Crank-Nicolson PDE solver plus Monte Carlo
//! particles ([`pde`], [`mc`]).
//!
//! Observables (survival probability, sink flux, equilibrium profile) live
//! in [`observables`]; end-to-end orchestration used by the CLI and the
//! browser demo lives in [`solve`]; diagnostics comparing the re-derived
//! algebra against the transcribed closed forms live in [`fidelity`].

pub mod closure;
pub mod error;
pub mod fidelity;
pub mod green;
pub mod ilt;
pub mod mc;
pub mod model;
pub mod observables;
pub mod pde;
pub mod solve;
pub mod volterra;

pub use error::{Error, Result};
pub use model::{InitialCondition, ModelParams, SinkSpec, SpectralVars};
