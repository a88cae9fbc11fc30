//! Time-domain PDE oracle: Crank-Nicolson on a finite-volume grid.
//!
//! The scheme discretizes the conservative form `dP/dt = -dF/dx + sink`
//! with interface fluxes
//!
//! ```text
//!     F_{i+1/2} = -D (P_{i+1} - P_i)/dx - omega D sgn(x_{i+1/2}) (P_i + P_{i+1})/2
//! ```
//!
//! Because interfaces never sit on the potential kink (the origin is a
//! node), no difference ever straddles the cusp: the flux form realizes
//! the cusp condition naturally and conserves `sum P dx` to roundoff with
//! reflecting (zero-flux) boundaries. Away from the origin it reduces to
//! central differences for both diffusion and drift.
//!
//! The point sink is regularized by a normalized hat `delta_h` of width
//! `h` (default `2 dx`), entering as a diagonal reaction term
//! `2 sigma k(t) delta_h(x_i) P_i`. Crank-Nicolson time stepping is
//! started with two implicit-Euler half steps to damp the delta initial
//! condition; the matrix is tridiagonal and solved by the Thomas
//! algorithm each step.

use crate::error::{Error, Result};
use crate::model::{ModelParams, SinkSpec};

/// Spatial/temporal grid for the PDE oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Domain half-width `L`; nodes span `[-L, L]`.
    pub half_width: f64,
    /// Node count, odd so the origin is a node.
    pub nx: usize,
    /// Time step.
    pub dt: f64,
    /// Final time.
    pub t_max: f64,
    /// Sink regularization width `h`; `None` means `2 dx`.
    pub delta_width: Option<f64>,
    /// Times at which full field snapshots are captured (snapped to steps).
    pub output_times: Vec<f64>,
    /// Positions (snapped to nodes) whose full per-step time series are
    /// recorded, e.g. for Laplace-transforming the field at a fixed `x`.
    pub probes: Vec<f64>,
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.nx - 1) as f64
    }

    /// Effective regularization width.
    pub fn h(&self) -> f64 {
        self.delta_width.unwrap_or(2.0 * self.dx())
    }

    /// Build a grid with sane defaults: `L` large enough that either the
    /// equilibrium tail `exp(-omega L)` is below 1e-10 or, for free
    /// diffusion, `L > 8 sqrt(D t_max)`, with extra room around `x0`.
    pub fn auto(params: &ModelParams, x0: f64, t_max: f64, dx: f64, dt: f64) -> GridSpec {
        let spread = 8.0 * (params.d * t_max).sqrt();
        let l_pot = if params.omega > 0.0 {
            23.1 / params.omega
        } else {
            0.0
        };
        let l = (l_pot.max(spread) + x0.abs() + 1.0).max(2.0);
        let half_cells = (l / dx).ceil() as usize;
        GridSpec {
            half_width: half_cells as f64 * dx,
            nx: 2 * half_cells + 1,
            dt,
            t_max,
            delta_width: None,
            output_times: Vec::new(),
            probes: Vec::new(),
        }
    }

    pub fn validate(&self, params: &ModelParams, x0: f64) -> Result<()> {
        if self.nx < 5 || self.nx % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "grid.nx must be odd and >= 5, got {}",
                self.nx
            )));
        }
        if !self.half_width.is_finite() || self.half_width <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "grid.half_width must be finite and > 0, got {}",
                self.half_width
            )));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 || !self.t_max.is_finite() || self.t_max < self.dt
        {
            return Err(Error::InvalidInput(format!(
                "grid time controls invalid: dt = {}, t_max = {}",
                self.dt, self.t_max
            )));
        }
        // Domain must hold the equilibrium (omega > 0) or the diffusive
        // spread (omega = 0) without visible truncation.
        if params.omega > 0.0 {
            if params.omega * self.half_width < 23.0 {
                return Err(Error::InvalidInput(format!(
                    "grid.half_width too small: omega*L = {:.2} < 23 (equilibrium tail \
                     not contained)",
                    params.omega * self.half_width
                )));
            }
        } else if self.half_width <= 8.0 * (params.d * self.t_max).sqrt() {
            return Err(Error::InvalidInput(format!(
                "grid.half_width too small for free diffusion: L = {} <= 8 sqrt(D t_max) = {}",
                self.half_width,
                8.0 * (params.d * self.t_max).sqrt()
            )));
        }
        if x0.abs() > self.half_width - 5.0 * self.dx() {
            return Err(Error::InvalidInput(format!(
                "x0 = {x0} too close to the domain edge L = {}",
                self.half_width
            )));
        }
        let h = self.h();
        if !(h > 0.49 * self.dx()) || !h.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid.delta_width must be at least half a cell, got {h}"
            )));
        }
        for &t in &self.output_times {
            if !(0.0..=self.t_max).contains(&t) {
                return Err(Error::InvalidInput(format!(
                    "output time {t} outside [0, t_max = {}]",
                    self.t_max
                )));
            }
        }
        for &xp in &self.probes {
            if !xp.is_finite() || xp.abs() > self.half_width {
                return Err(Error::InvalidInput(format!(
                    "probe position {xp} outside the domain [-L, L], L = {}",
                    self.half_width
                )));
            }
        }
        Ok(())
    }
}

/// A full field snapshot at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub p: Vec<f64>,
}

/// Time-domain solution record produced by the PDE and Monte Carlo
/// oracles: per-step series at the origin plus field snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGridField {
    /// Node positions.
    pub x: Vec<f64>,
    /// Step times `0, dt, 2 dt, ...`.
    pub t: Vec<f64>,
    /// `P(0, t)` per step.
    pub origin: Vec<f64>,
    /// Survival `S(t) = integral P dx` per step.
    pub survival: Vec<f64>,
    /// Sink flux `J(t) = 2 k(t) P(0, t)` per step.
    pub flux: Vec<f64>,
    /// Field snapshots at the requested output times.
    pub snapshots: Vec<Snapshot>,
    /// Probe positions after snapping to nodes.
    pub probes: Vec<f64>,
    /// Per-step series `P(probes[k], t)` for each probe, indexed like `t`.
    pub probe_tracks: Vec<Vec<f64>>,
    /// The source position after snapping to the nearest node.
    pub x0_snapped: f64,
    /// Binomial standard errors for `survival` (Monte Carlo only).
    pub survival_stderr: Option<Vec<f64>>,
}

impl TimeGridField {
    /// Linear interpolation of the origin series at time `t`.
    pub fn origin_at(&self, t: f64) -> f64 {
        interp(&self.t, &self.origin, t)
    }

    /// Linear interpolation of the survival series at time `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        interp(&self.t, &self.survival, t)
    }
}

pub(crate) fn interp(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    match ts.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i >= ts.len() => *ys.last().unwrap(),
        Err(i) => {
            let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
            ys[i - 1] * (1.0 - w) + ys[i] * w
        }
    }
}

/// Crank-Nicolson solve of the sink-augmented drift-diffusion equation
/// for a unit point mass released at `x0` (snapped to the nearest node).
pub fn cn_solve(
    params: &ModelParams,
    sink: &SinkSpec,
    x0: f64,
    grid: &GridSpec,
) -> Result<TimeGridField> {
    params.validate()?;
    sink.validate()?;
    grid.validate(params, x0)?;

    let nx = grid.nx;
    let dx = grid.dx();
    let l = grid.half_width;
    let x: Vec<f64> = (0..nx).map(|i| -l + i as f64 * dx).collect();
    let origin_idx = (nx - 1) / 2;

    // Snap the source to the nearest node.
    let src_idx = ((x0 + l) / dx).round() as usize;
    let x0_snapped = x[src_idx];

    // Static flux-form tridiagonal operator (lower, diag, upper).
    let r = params.d / (dx * dx);
    let wdrift = |xi: f64| params.omega * params.d * xi.signum() / (2.0 * dx);
    let mut lo = vec![0.0; nx];
    let mut di = vec![0.0; nx];
    let mut up = vec![0.0; nx];
    for i in 0..nx {
        let w_right = if i + 1 < nx {
            wdrift(0.5 * (x[i] + x[i + 1]))
        } else {
            0.0
        };
        let w_left = if i > 0 {
            wdrift(0.5 * (x[i - 1] + x[i]))
        } else {
            0.0
        };
        if i > 0 {
            lo[i] = r - w_left;
            di[i] += -r - w_left;
        }
        if i + 1 < nx {
            up[i] = r + w_right;
            di[i] += -r + w_right;
        }
    }

    // Normalized hat regularization of the sink delta.
    let h = grid.h();
    let mut sink_nodes: Vec<(usize, f64)> = Vec::new();
    let mut weight_sum = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let v = (h - xi.abs()).max(0.0) / (h * h);
        if v > 0.0 {
            sink_nodes.push((i, v));
            weight_sum += v * dx;
        }
    }
    for node in &mut sink_nodes {
        node.1 /= weight_sum; // exact discrete normalization: sum delta_h dx = 1
    }

    let n_steps = (grid.t_max / grid.dt).round().max(1.0) as usize;
    let dt = grid.dt;

    let mut p = vec![0.0; nx];
    p[src_idx] = 1.0 / dx;

    let probe_idx: Vec<usize> = grid
        .probes
        .iter()
        .map(|&xp| ((xp + l) / dx).round() as usize)
        .collect();
    let probes_snapped: Vec<f64> = probe_idx.iter().map(|&i| x[i]).collect();

    let mut t_series = Vec::with_capacity(n_steps + 1);
    let mut origin = Vec::with_capacity(n_steps + 1);
    let mut survival = Vec::with_capacity(n_steps + 1);
    let mut flux = Vec::with_capacity(n_steps + 1);
    let mut probe_tracks: Vec<Vec<f64>> = probe_idx
        .iter()
        .map(|_| Vec::with_capacity(n_steps + 1))
        .collect();
    let record = |t: f64,
                  p: &[f64],
                  ts: &mut Vec<f64>,
                  or: &mut Vec<f64>,
                  su: &mut Vec<f64>,
                  fl: &mut Vec<f64>,
                  tracks: &mut Vec<Vec<f64>>| {
        ts.push(t);
        or.push(p[origin_idx]);
        su.push(p.iter().sum::<f64>() * dx);
        fl.push(2.0 * sink.strength(t) * p[origin_idx]);
        for (track, &i) in tracks.iter_mut().zip(&probe_idx) {
            track.push(p[i]);
        }
    };
    record(
        0.0,
        &p,
        &mut t_series,
        &mut origin,
        &mut survival,
        &mut flux,
        &mut probe_tracks,
    );

    // Snapshot bookkeeping: map step index -> requested times.
    let mut snap_at: Vec<(usize, f64)> = grid
        .output_times
        .iter()
        .map(|&t| (((t / dt).round() as usize).min(n_steps), t))
        .collect();
    snap_at.sort_by(|a, b| a.0.cmp(&b.0));
    let mut snapshots = Vec::new();
    let mut snap_cursor = 0;
    while snap_cursor < snap_at.len() && snap_at[snap_cursor].0 == 0 {
        snapshots.push(Snapshot {
            t: 0.0,
            p: p.clone(),
        });
        snap_cursor += 1;
    }

    // Workspaces for the theta step.
    let mut rhs = vec![0.0; nx];
    let mut c_prime = vec![0.0; nx];
    let mut d_prime = vec![0.0; nx];

    // One theta-weighted step from t0 (weight a_old on the explicit side)
    // to t1 (weight a_new on the implicit side).
    let sink_diag = |t: f64, i: usize, nodes: &[(usize, f64)]| -> f64 {
        // Diagonal sink contribution at node i (0 off the hat support).
        for &(j, v) in nodes {
            if j == i {
                return 2.0 * params.sigma * sink.strength(t) * v;
            }
        }
        0.0
    };
    let mut theta_step = |p: &mut Vec<f64>, t0: f64, t1: f64, a_old: f64, a_new: f64| {
        // rhs = (I + a_old A(t0)) p
        for i in 0..nx {
            let mut v = (1.0 + a_old * (di[i] + sink_diag(t0, i, &sink_nodes))) * p[i];
            if i > 0 {
                v += a_old * lo[i] * p[i - 1];
            }
            if i + 1 < nx {
                v += a_old * up[i] * p[i + 1];
            }
            rhs[i] = v;
        }
        // Solve (I - a_new A(t1)) p_new = rhs by the Thomas algorithm.
        let diag_at = |i: usize| 1.0 - a_new * (di[i] + sink_diag(t1, i, &sink_nodes));
        c_prime[0] = -a_new * up[0] / diag_at(0);
        d_prime[0] = rhs[0] / diag_at(0);
        for i in 1..nx {
            let m = diag_at(i) - (-a_new * lo[i]) * c_prime[i - 1];
            c_prime[i] = if i + 1 < nx { -a_new * up[i] / m } else { 0.0 };
            d_prime[i] = (rhs[i] - (-a_new * lo[i]) * d_prime[i - 1]) / m;
        }
        p[nx - 1] = d_prime[nx - 1];
        for i in (0..nx - 1).rev() {
            p[i] = d_prime[i] - c_prime[i] * p[i + 1];
        }
    };

    for step in 0..n_steps {
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;
        if step == 0 {
            // Rannacher startup: two implicit-Euler half steps.
            let tm = t0 + 0.5 * dt;
            theta_step(&mut p, t0, tm, 0.0, 0.5 * dt);
            theta_step(&mut p, tm, t1, 0.0, 0.5 * dt);
        } else {
            theta_step(&mut p, t0, t1, 0.5 * dt, 0.5 * dt);
        }
        record(
            t1,
            &p,
            &mut t_series,
            &mut origin,
            &mut survival,
            &mut flux,
            &mut probe_tracks,
        );
        while snap_cursor < snap_at.len() && snap_at[snap_cursor].0 == step + 1 {
            snapshots.push(Snapshot { t: t1, p: p.clone() });
            snap_cursor += 1;
        }
        if !p[origin_idx].is_finite() {
            return Err(Error::Numerical(format!(
                "PDE solution lost finiteness at t = {t1}"
            )));
        }
    }

    Ok(TimeGridField {
        x,
        t: t_series,
        origin,
        survival,
        flux,
        snapshots,
        probes: probes_snapped,
        probe_tracks,
        x0_snapped,
        survival_stderr: None,
    })
}

/// Numerical Laplace transform of a sampled time series on a uniform
/// grid, by composite Simpson quadrature of `exp(-s t) y(t)`.
///
/// Returns `(value, tail_bound)` where the tail bound estimates the
/// truncated `[t_max, inf)` contribution from the last samples. Rejects
/// windows with `s * t_max < 20`, for which the truncation would not be
/// negligible at the accuracy this crate targets.
pub fn numeric_laplace(t: &[f64], y: &[f64], s: f64) -> Result<(f64, f64)> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::InvalidInput(
            "numeric_laplace needs matching series of length >= 3".into(),
        ));
    }
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "numeric_laplace needs real s > 0, got {s}"
        )));
    }
    let n = t.len();
    let dt = t[1] - t[0];
    for w in t.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidInput(
                "numeric_laplace requires a uniform time grid".into(),
            ));
        }
    }
    let t_max = t[n - 1];
    if s * t_max < 20.0 {
        return Err(Error::InsufficientWindow(s * t_max, 20.0));
    }
    let f = |i: usize| (-s * t[i]).exp() * y[i];
    let panels = n - 1;
    let simpson_pairs = panels / 2;
    let mut acc = 0.0;
    for k in 0..simpson_pairs {
        let i = 2 * k;
        acc += dt / 3.0 * (f(i) + 4.0 * f(i + 1) + f(i + 2));
    }
    if panels % 2 == 1 {
        // One trapezoid panel at the end; the integrand there is below
        // exp(-20), so the lower order is immaterial.
        acc += 0.5 * dt * (f(n - 2) + f(n - 1));
    }
    let tail_scale = y[n.saturating_sub(n / 10 + 1)..]
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let tail_bound = tail_scale * (-s * t_max).exp() / s;
    Ok((acc, tail_bound))
}
