//! Time-domain solutions of the analytic route: picks the right
//! inversion method per sink law, drives the closure at the needed
//! Laplace nodes, and returns checked values.
//!
//! Routing: the constant and exponential-decay laws (and every
//! zero-strength degenerate) evaluate at arbitrary complex `s`, so they
//! run through the Talbot contour with a Gaver-Stehfest cross-check.
//! The linear and inverse-time laws integrate an ODE along the real
//! axis, so they invert by Gaver-Stehfest alone; their cross-check
//! compares truncation orders `N` and `N-2` instead.
//!
//! A constant-gain sink (`sigma = +1`) grows exponentially — the
//! transform has a pole on the positive real axis that fixed-contour
//! methods cannot see — so its time-domain inversion is rejected up
//! front (the Laplace-domain API remains available).

use num_complex::Complex64;

use crate::closure::{
    assemble_field, origin_response, p0_inverse_multi, p0_linear_multi, ClosureOpts,
    OriginResponse,
};
use crate::error::{Error, Result};
use crate::ilt::{invert_checked, stehfest_coefficients, IltConfig};
use crate::model::{ModelParams, SinkSpec};
use crate::observables::{survival_laplace, SourceTag, SurvivalCurve};

/// Inversion route of a sink law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IltRoute {
    /// Talbot contour (complex `s`) with Stehfest cross-check.
    Complex,
    /// Real-axis only: Gaver-Stehfest with order cross-check.
    RealAxis,
}

/// Pick the inversion route for a law, rejecting combinations whose
/// time-domain behavior a fixed contour cannot represent.
pub fn route_for(params: &ModelParams, sink: &SinkSpec) -> Result<IltRoute> {
    if sink.is_trivial() {
        return Ok(IltRoute::Complex);
    }
    match *sink {
        SinkSpec::NoSink => Ok(IltRoute::Complex),
        SinkSpec::Constant { .. } => {
            if params.sigma > 0.0 {
                Err(Error::InvalidInput(
                    "time-domain inversion of a constant gain (sigma = +1) is not \
                     supported: the solution grows exponentially and its transform \
                     has a pole right of every fixed inversion contour; evaluate in \
                     the Laplace domain instead"
                        .into(),
                ))
            } else {
                Ok(IltRoute::Complex)
            }
        }
        SinkSpec::ExpDecay { .. } => Ok(IltRoute::Complex),
        SinkSpec::Linear { .. } | SinkSpec::InverseTime { .. } => Ok(IltRoute::RealAxis),
    }
}

/// One inverted value with its cross-check.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RoutedValue {
    pub value: f64,
    /// Talbot-vs-Stehfest gap (complex route) or Stehfest order gap
    /// (real route).
    pub discrepancy: f64,
    /// Set when the discrepancy exceeds the configured agreement
    /// tolerance.
    pub flagged: bool,
}

/// Solver configuration: inversion controls plus closure controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub ilt: IltConfig,
    pub closure: ClosureOpts,
    /// Thread cap for batch drivers; `None` reads `SINKLAB_THREADS` and
    /// falls back to the machine parallelism.
    pub threads: Option<usize>,
    /// Relative flag threshold for the real-axis order cross-check.
    /// The `N` vs `N-2` Stehfest gap mostly measures the *lower* order's
    /// truncation error, so it runs well above the Talbot-vs-Stehfest
    /// gap of the complex route; the default tracks the accuracy
    /// contract of the real-axis route rather than `ilt.agreement_tol`.
    pub order_gap_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            ilt: IltConfig::default(),
            closure: ClosureOpts::default(),
            threads: None,
            order_gap_tol: 1e-2,
        }
    }
}

impl SolveConfig {
    fn budget(&self) -> usize {
        self.threads.unwrap_or_else(thread_budget)
    }
}

/// Thread budget: `SINKLAB_THREADS` if set, else machine parallelism.
pub fn thread_budget() -> usize {
    thread_budget_from(std::env::var("SINKLAB_THREADS").ok().as_deref())
}

fn thread_budget_from(var: Option<&str>) -> usize {
    if let Some(v) = var {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Deterministic parallel map: results land by index regardless of the
/// thread count or scheduling.
fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let n = items.len();
    let threads = threads.max(1).min(n.max(1));
    if threads <= 1 || n <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let counter = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..n).map(|_| None).collect();
    let slot_ptr = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..threads {
            handles.push(scope.spawn(|| {
                let mut local: Vec<(usize, R)> = Vec::new();
                loop {
                    let i = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    local.push((i, f(i, &items[i])));
                }
                let mut guard = slot_ptr.lock().unwrap();
                for (i, r) in local {
                    guard[i] = Some(r);
                }
            }));
        }
        for h in handles {
            h.join().expect("solver worker panicked");
        }
    });
    slots.into_iter().map(|r| r.unwrap()).collect()
}

// ---------------------------------------------------------------------
// Quantity extraction
// ---------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Quantity {
    Origin,
    Survival,
    Field(f64),
}

fn extract(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    resp: &OriginResponse,
    what: Quantity,
) -> Result<Complex64> {
    match what {
        Quantity::Origin => Ok(resp.p0),
        Quantity::Survival => Ok(survival_laplace(params, resp)),
        Quantity::Field(x) => assemble_field(params, sink, x0, resp.s, resp, x),
    }
}

/// Closure responses at a batch of real Laplace nodes, using the
/// single-pass multi-target solvers where the law supports them.
fn real_axis_responses(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    nodes: &[f64],
    opts: &ClosureOpts,
) -> Result<Vec<OriginResponse>> {
    if !sink.is_trivial() {
        match *sink {
            SinkSpec::Linear { alpha1 } => {
                return p0_linear_multi(params, alpha1, x0, nodes, opts)
            }
            SinkSpec::InverseTime { alpha, t_on } => {
                return p0_inverse_multi(params, alpha, t_on, x0, nodes, opts)
            }
            _ => {}
        }
    }
    nodes
        .iter()
        .map(|&s| origin_response(params, sink, x0, Complex64::new(s, 0.0), opts))
        .collect()
}

fn require_real_value(v: Complex64) -> Result<f64> {
    if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
        return Err(Error::NonFiniteTransform(format!(
            "real-axis evaluation produced a complex value: {v}"
        )));
    }
    Ok(v.re)
}

fn stehfest_combine(node_values: &[f64], t: f64, n: usize) -> f64 {
    let coeffs = stehfest_coefficients(n);
    let ln2_t = std::f64::consts::LN_2 / t;
    ln2_t
        * coeffs
            .iter()
            .zip(node_values)
            .map(|(&c, &f)| c * f)
            .sum::<f64>()
}

/// Invert one quantity at one time through the law's route.
fn invert_at(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    t: f64,
    what: Quantity,
    cfg: &SolveConfig,
) -> Result<RoutedValue> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "inversion time must be positive and finite, got {t}"
        )));
    }
    cfg.ilt.validate()?;
    match route_for(params, sink)? {
        IltRoute::Complex => {
            let f = |s: Complex64| -> Result<Complex64> {
                let resp = origin_response(params, sink, x0, s, &cfg.closure)?;
                extract(params, sink, x0, &resp, what)
            };
            let inv = invert_checked(f, t, &cfg.ilt)?;
            Ok(RoutedValue {
                value: inv.value,
                discrepancy: inv.discrepancy,
                flagged: inv.flagged,
            })
        }
        IltRoute::RealAxis => {
            let n = cfg.ilt.stehfest_n;
            let ln2_t = std::f64::consts::LN_2 / t;
            let nodes: Vec<f64> = (1..=n).map(|k| k as f64 * ln2_t).collect();
            let resps = real_axis_responses(params, sink, x0, &nodes, &cfg.closure)?;
            let mut vals = Vec::with_capacity(n);
            for r in &resps {
                vals.push(require_real_value(extract(params, sink, x0, r, what)?)?);
            }
            let value = stehfest_combine(&vals, t, n);
            // Order cross-check: drop one even order and compare.
            let value_lo = stehfest_combine(&vals[..n - 2], t, n - 2);
            let discrepancy = (value - value_lo).abs();
            let flagged =
                discrepancy > cfg.order_gap_tol * value.abs().max(value_lo.abs()).max(1.0);
            if !value.is_finite() {
                return Err(Error::NonFiniteTransform(format!(
                    "Stehfest summation diverged at t = {t}"
                )));
            }
            Ok(RoutedValue {
                value,
                discrepancy,
                flagged,
            })
        }
    }
}

// ---------------------------------------------------------------------
// Public drivers
// ---------------------------------------------------------------------

/// `P(0,t)` on a time grid.
pub fn origin_curve(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    ts: &[f64],
    cfg: &SolveConfig,
) -> Result<Vec<RoutedValue>> {
    params.validate()?;
    sink.validate()?;
    route_for(params, sink)?;
    parallel_map(ts, cfg.budget(), |_, &t| {
        invert_at(params, sink, x0, t, Quantity::Origin, cfg)
    })
    .into_iter()
    .collect()
}

/// Survival `S(t)` at one time, from the Laplace-domain flux balance
/// inverted numerically.
pub fn survival_from_laplace(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    t: f64,
    cfg: &SolveConfig,
) -> Result<RoutedValue> {
    params.validate()?;
    sink.validate()?;
    invert_at(params, sink, x0, t, Quantity::Survival, cfg)
}

/// Survival curve on a grid, with per-point checks.
pub fn survival_curve_analytic(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    ts: &[f64],
    cfg: &SolveConfig,
) -> Result<(SurvivalCurve, Vec<RoutedValue>)> {
    params.validate()?;
    sink.validate()?;
    route_for(params, sink)?;
    let vals: Vec<RoutedValue> = parallel_map(ts, cfg.budget(), |_, &t| {
        invert_at(params, sink, x0, t, Quantity::Survival, cfg)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let curve = SurvivalCurve {
        t: ts.to_vec(),
        s: vals.iter().map(|v| v.value).collect(),
        source: SourceTag::AnalyticIlt,
    };
    Ok((curve, vals))
}

/// Full field `P(x,t)` on a time-by-position grid; `out[i][j]`
/// corresponds to `(ts[i], xs[j])`.
pub fn field_grid(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    ts: &[f64],
    xs: &[f64],
    cfg: &SolveConfig,
) -> Result<Vec<Vec<RoutedValue>>> {
    params.validate()?;
    sink.validate()?;
    route_for(params, sink)?;
    let cells: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&t| xs.iter().map(move |&x| (t, x)))
        .collect();
    let flat: Vec<RoutedValue> = parallel_map(&cells, cfg.budget(), |_, &(t, x)| {
        invert_at(params, sink, x0, t, Quantity::Field(x), cfg)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(flat.chunks(xs.len()).map(|c| c.to_vec()).collect())
}
