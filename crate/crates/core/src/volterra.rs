//! Volterra oracle: the origin density solves a closed integral equation
//! in the time domain,
//!
//! ```text
//!     P(0,t) = g(t) + 2 sigma \int_0^t K(t - tau) k(tau) P(0,tau) dtau,
//! ```
//!
//! where `g` is the no-sink origin density for a start at `x0` and `K`
//! the origin-to-origin response. Both have closed forms in the V
//! potential (derived independently of the Laplace-domain modules, which
//! makes this oracle a genuinely separate route to the same quantity):
//!
//! ```text
//!     K(u) = exp(-D q^2 u) / sqrt(4 pi D u) + (q/2) (1 + erf(q sqrt(D u)))
//!     g(t) = exp(q b - D q^2 t - b^2/(4 D t)) / sqrt(4 pi D t)
//!            + (q/2) erfc(b/(2 sqrt(D t)) - q sqrt(D t)),    b = |x0|
//! ```
//!
//! with `q = omega/2`. The weakly singular `1/sqrt(u)` part of `K` is
//! handled by product integration: the unknown is interpolated linearly
//! on each panel and integrated against the singular factor exactly, so
//! the scheme keeps second-order accuracy through the singularity. The
//! marching step divides by `1 - 2 sigma k_n w_nn`, which for the
//! absorbing sign is bounded below by 1.

use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SinkSpec};

/// Origin-to-origin memory kernel `K(u)`; integrably singular at `u = 0`.
pub fn origin_memory_kernel(params: &ModelParams, u: f64) -> f64 {
    let d = params.d;
    let q = params.q();
    let root = (4.0 * std::f64::consts::PI * d * u).sqrt();
    (-d * q * q * u).exp() / root + 0.5 * q * (1.0 + erf(q * (d * u).sqrt()))
}

/// No-sink origin density `g(t)` for a start at `x0`; `g(0) = 0` for
/// `x0 != 0` and the equilibrium value `omega/2` as `t -> inf`.
pub fn no_sink_origin_density(params: &ModelParams, x0: f64, t: f64) -> f64 {
    let d = params.d;
    let q = params.q();
    let b = x0.abs();
    if t <= 0.0 {
        return if b > 0.0 { 0.0 } else { f64::INFINITY };
    }
    let root = (4.0 * std::f64::consts::PI * d * t).sqrt();
    let gauss = (q * b - d * q * q * t - b * b / (4.0 * d * t)).exp() / root;
    gauss + 0.5 * q * erfc(b / (2.0 * (d * t).sqrt()) - q * (d * t).sqrt())
}

/// Solve the origin integral equation on a uniform time grid, returning
/// `P(0, t_i)` for every grid node.
///
/// Requires `t[0] = 0`, a uniform spacing, and `x0 != 0` (the driving
/// term `g` would be singular at `t = 0` for a start exactly on the
/// sink).
pub fn volterra_p0(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    t: &[f64],
) -> Result<Vec<f64>> {
    params.validate()?;
    sink.validate()?;
    if t.len() < 2 {
        return Err(Error::InvalidInput(
            "volterra_p0 needs at least two time nodes".into(),
        ));
    }
    if t[0] != 0.0 {
        return Err(Error::InvalidInput(format!(
            "volterra_p0 time grid must start at 0, got {}",
            t[0]
        )));
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput("time grid must be increasing".into()));
    }
    for w in t.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidInput(
                "volterra_p0 requires a uniform time grid".into(),
            ));
        }
    }
    if x0 == 0.0 {
        return Err(Error::InvalidInput(
            "volterra_p0 requires x0 != 0; the no-sink driving term is singular \
             for a start exactly at the origin"
                .into(),
        ));
    }

    let n = t.len();
    let d = params.d;
    let q = params.q();
    let sing_norm = 1.0 / (4.0 * std::f64::consts::PI * d).sqrt();

    // Regular kernel remainder K_reg(u) = K(u) - 1/sqrt(4 pi D u); bounded,
    // K_reg(0) = q/2.
    let k_reg = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.5 * q;
        }
        let root = (4.0 * std::f64::consts::PI * d * u).sqrt();
        ((-d * q * q * u).exp() - 1.0) / root + 0.5 * q * (1.0 + erf(q * (d * u).sqrt()))
    };

    // Product-integration moments for the 1/sqrt(u) factor on panel
    // [(m-1) dt, m dt] against a linear interpolant: the panel assigns
    // weight A(m) to the older node and B(m) to the newer one.
    let mut a_w = vec![0.0; n + 1];
    let mut b_w = vec![0.0; n + 1];
    let sdt = dt.sqrt();
    for m in 1..=n {
        let mf = m as f64;
        let i0 = 2.0 * sdt * (mf.sqrt() - (mf - 1.0).sqrt());
        let i1 = mf * dt * i0 - (2.0 / 3.0) * dt * sdt * (mf.powf(1.5) - (mf - 1.0).powf(1.5));
        a_w[m] = sing_norm * (i0 - i1 / dt);
        b_w[m] = sing_norm * (i1 / dt);
    }
    let k_reg_grid: Vec<f64> = (0..n).map(|m| k_reg(m as f64 * dt)).collect();

    let g: Vec<f64> = t
        .iter()
        .map(|&ti| no_sink_origin_density(params, x0, ti))
        .collect();
    let k_grid: Vec<f64> = t.iter().map(|&ti| sink.strength(ti)).collect();

    let mut p = vec![0.0; n];
    p[0] = g[0];
    let two_sigma = 2.0 * params.sigma;
    for i in 1..n {
        // Convolution weights w_j for nodes j = 0..i: singular product
        // weights plus trapezoid on the regular remainder.
        let mut acc = 0.0;
        for j in 0..i {
            // Node j takes the older-end weight of panel [t_j, t_{j+1}]
            // (that panel sits m = i - j spacings before t_i) and, for
            // j >= 1, the newer-end weight of panel [t_{j-1}, t_j].
            let m = i - j;
            let mut w = if j == 0 { a_w[m] } else { a_w[m] + b_w[m + 1] };
            let trap = if j == 0 { 0.5 } else { 1.0 };
            w += dt * trap * k_reg_grid[m];
            acc += w * k_grid[j] * p[j];
        }
        let w_ii = b_w[1] + 0.5 * dt * k_reg_grid[0];
        let denom = 1.0 - two_sigma * k_grid[i] * w_ii;
        if denom.abs() < 1e-10 {
            return Err(Error::Numerical(format!(
                "Volterra marching step became singular at t = {} (denominator {denom:.3e})",
                t[i]
            )));
        }
        p[i] = (g[i] + two_sigma * acc) / denom;
        if !p[i].is_finite() {
            return Err(Error::Numerical(format!(
                "Volterra solution lost finiteness at t = {}",
                t[i]
            )));
        }
    }
    Ok(p)
}
