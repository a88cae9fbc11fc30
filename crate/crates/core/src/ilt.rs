//! Numerical inverse Laplace transforms.
//!
//! Two independent methods with complementary failure modes:
//!
//! * [`talbot`] — the fixed Talbot contour. Samples `F` at complex points
//!   on a cotangent contour wrapping the negative real axis; excellent for
//!   transforms with branch cuts and poles on the negative axis (every
//!   Laplace-domain object in this crate is of that type). Needs `F`
//!   evaluable at complex `s`.
//! * [`stehfest`] — the Gaver-Stehfest series. Samples `F` at a handful of
//!   positive real points only, at the price of strong cancellation;
//!   practical accuracy with `n = 14` in double precision is around
//!   `1e-6`..`1e-8` for smooth transforms. This is the method of choice
//!   when `F` is only computable on the real axis (the backward-ODE sink
//!   laws), and an independent cross-check otherwise.
//!
//! [`invert_checked`] runs both and flags disagreement, which in practice
//! catches wrong-branch evaluations, missed poles, and non-smooth time
//! behavior long before they corrupt downstream observables.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Inversion controls: contour size `talbot_m`, series length `stehfest_n`
/// (even, between 4 and 20), and the relative disagreement threshold for
/// [`invert_checked`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IltConfig {
    pub talbot_m: usize,
    pub stehfest_n: usize,
    pub agreement_tol: f64,
}

impl Default for IltConfig {
    fn default() -> Self {
        IltConfig {
            talbot_m: 32,
            stehfest_n: 14,
            agreement_tol: 1e-6,
        }
    }
}

impl IltConfig {
    pub fn validate(&self) -> Result<()> {
        if self.talbot_m < 4 || self.talbot_m > 256 {
            return Err(Error::InvalidInput(format!(
                "ilt.talbot_m must be in [4, 256], got {}",
                self.talbot_m
            )));
        }
        if self.stehfest_n < 4 || self.stehfest_n > 20 || self.stehfest_n % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "ilt.stehfest_n must be even and in [4, 20], got {}",
                self.stehfest_n
            )));
        }
        if !self.agreement_tol.is_finite() || self.agreement_tol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "ilt.agreement_tol must be finite and > 0, got {}",
                self.agreement_tol
            )));
        }
        Ok(())
    }
}

/// Result of a cross-checked inversion: the Talbot value, the
/// Talbot/Stehfest disagreement, and whether it exceeded the tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedInversion {
    pub value: f64,
    pub stehfest_value: f64,
    pub discrepancy: f64,
    pub flagged: bool,
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "inversion time must be finite and > 0, got {t}"
        )));
    }
    Ok(())
}

/// Fixed-Talbot inversion with `m` contour nodes.
///
/// The contour is `s(theta) = r theta (cot theta + i)` with `r = 2m/(5t)`,
/// sampled at `theta_k = k pi / m`; only the upper half is evaluated, so
/// `F` must satisfy the reflection property `F(conj s) = conj F(s)` (true
/// of every transform of a real time function).
pub fn talbot<F>(f: F, t: f64, m: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    check_time(t)?;
    if m < 4 {
        return Err(Error::InvalidInput(format!(
            "talbot node count must be >= 4, got {m}"
        )));
    }
    let r = 2.0 * m as f64 / (5.0 * t);
    // theta = 0 node: s = r on the real axis, weight 1/2.
    let f0 = f(Complex64::new(r, 0.0))?;
    ensure_finite(f0, "talbot theta=0")?;
    let mut acc = 0.5 * f0.re * (r * t).exp();
    for k in 1..m {
        let theta = k as f64 * std::f64::consts::PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let fv = f(s)?;
        ensure_finite(fv, "talbot node")?;
        let term = ((s * t).exp() * fv * Complex64::new(1.0, sigma)).re;
        acc += term;
    }
    let value = acc * r / m as f64;
    if !value.is_finite() {
        return Err(Error::NonFiniteTransform(format!("talbot sum at t = {t}")));
    }
    Ok(value)
}

/// Gaver-Stehfest inversion with `n` terms (`n` even, 4..=20).
///
/// Samples `F` only at real `s = k ln2 / t`. Coefficients grow like
/// `10^{n/2}`, so the usable `n` is capped at 20 in double precision.
pub fn stehfest<F>(f: F, t: f64, n: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    check_time(t)?;
    if n < 4 || n > 20 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "stehfest term count must be even and in [4, 20], got {n}"
        )));
    }
    let coeffs = stehfest_coefficients(n);
    let ln2_t = std::f64::consts::LN_2 / t;
    let mut acc = 0.0;
    for (k, &v) in coeffs.iter().enumerate() {
        let s = (k + 1) as f64 * ln2_t;
        let fv = f(Complex64::new(s, 0.0))?;
        ensure_finite(fv, "stehfest node")?;
        if fv.im.abs() > 1e-10 * fv.re.abs().max(1e-300) {
            return Err(Error::NonFiniteTransform(format!(
                "stehfest expects a real-valued transform on the real axis, got {fv} at s = {s}"
            )));
        }
        acc += v * fv.re;
    }
    let value = acc * ln2_t;
    if !value.is_finite() {
        return Err(Error::NonFiniteTransform(format!(
            "stehfest sum at t = {t}"
        )));
    }
    Ok(value)
}

/// Run both methods and compare.
///
/// `value` is the Talbot result (the more accurate method for this
/// problem class); `flagged` is set when the two differ by more than
/// `agreement_tol * max(|talbot|, |stehfest|, 1)`.
pub fn invert_checked<F>(f: F, t: f64, cfg: &IltConfig) -> Result<CheckedInversion>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    cfg.validate()?;
    let tv = talbot(&f, t, cfg.talbot_m)?;
    let sv = stehfest(&f, t, cfg.stehfest_n)?;
    let discrepancy = (tv - sv).abs();
    let scale = tv.abs().max(sv.abs()).max(1.0);
    Ok(CheckedInversion {
        value: tv,
        stehfest_value: sv,
        discrepancy,
        flagged: discrepancy > cfg.agreement_tol * scale,
    })
}

fn ensure_finite(v: Complex64, what: &str) -> Result<()> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteTransform(what.to_string()))
    }
}

/// Classical Stehfest weights `V_k`, k = 1..=n.
pub(crate) fn stehfest_coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    let fact = {
        let mut f = vec![1.0f64; 21];
        for i in 1..=20 {
            f[i] = f[i - 1] * i as f64;
        }
        f
    };
    let mut v = Vec::with_capacity(n);
    for k in 1..=n {
        let mut sum = 0.0;
        let j_lo = k.div_ceil(2);
        let j_hi = k.min(half);
        for j in j_lo..=j_hi {
            let num = (j as f64).powi(half as i32) * fact[2 * j];
            let den =
                fact[half - j] * fact[j] * fact[j - 1] * fact[k - j] * fact[2 * j - k];
            sum += num / den;
        }
        let sign = if (half + k) % 2 == 0 { 1.0 } else { -1.0 };
        v.push(sign * sum);
    }
    v
}
