//! Subcommand implementations and the helpers they share.

pub mod compare;
pub mod oracle;
pub mod selftest;
pub mod solve_cmd;
pub mod sweep;

use std::path::Path;

use num_complex::Complex64;
use sinklab_core::closure::{
    closure_residual, origin_response, p0_inverse_multi, p0_linear_multi, OriginResponse,
};
use sinklab_core::pde::GridSpec;
use sinklab_core::solve::IltRoute;
use sinklab_core::SinkSpec;

use crate::config::{PdeSection, Resolved};
use crate::CliError;

pub fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::io(format!("cannot create output directory {}: {e}", out.display())))
}

pub fn route_label(route: IltRoute) -> &'static str {
    match route {
        IltRoute::Complex => "complex",
        IltRoute::RealAxis => "real_axis",
    }
}

/// Worst relative closure residual over the Gaver-Stehfest abscissas
/// `j ln 2 / t` of every output time — the Laplace nodes the inversion
/// actually consumes. A healthy solve keeps this at roundoff level.
pub fn closure_residual_max(r: &Resolved) -> Result<f64, CliError> {
    let n = r.solve.ilt.stehfest_n;
    let mut nodes: Vec<f64> = Vec::with_capacity(r.ts.len() * n);
    for &t in &r.ts {
        for j in 1..=n {
            nodes.push(j as f64 * std::f64::consts::LN_2 / t);
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let responses: Vec<OriginResponse> = match r.sink {
        SinkSpec::Linear { alpha1 } => {
            p0_linear_multi(&r.params, alpha1, r.x0, &nodes, &r.solve.closure)?
        }
        SinkSpec::InverseTime { alpha, t_on } => {
            p0_inverse_multi(&r.params, alpha, t_on, r.x0, &nodes, &r.solve.closure)?
        }
        _ => nodes
            .iter()
            .map(|&s| {
                origin_response(
                    &r.params,
                    &r.sink,
                    r.x0,
                    Complex64::new(s, 0.0),
                    &r.solve.closure,
                )
            })
            .collect::<sinklab_core::Result<_>>()?,
    };
    let mut worst = 0.0f64;
    for resp in &responses {
        worst = worst.max(closure_residual(&r.params, &r.sink, r.x0, resp)?);
    }
    Ok(worst)
}

/// Build the Crank-Nicolson grid from the `[pde]` section: automatic
/// domain sizing unless overridden, final time stretched to the last
/// output time, snapshots at the output times when requested.
pub fn build_cn_grid(
    r: &Resolved,
    pde: &PdeSection,
    want_snapshots: bool,
) -> Result<GridSpec, CliError> {
    let t_last = *r.ts.last().expect("resolved grid is nonempty");
    let t_max = if pde.t_max > 0.0 { pde.t_max } else { t_last };
    if t_max < t_last {
        return Err(CliError::config(format!(
            "pde.t_max = {t_max} is below the last output time {t_last}"
        )));
    }
    if !(pde.dx > 0.0) || !(pde.dt > 0.0) {
        return Err(CliError::config(format!(
            "pde.dx and pde.dt must be positive, got dx = {}, dt = {}",
            pde.dx, pde.dt
        )));
    }
    let mut grid = GridSpec::auto(&r.params, r.x0, t_max, pde.dx, pde.dt);
    if pde.half_width > 0.0 {
        let half_cells = (pde.half_width / pde.dx).ceil().max(2.0) as usize;
        grid.half_width = half_cells as f64 * pde.dx;
        grid.nx = 2 * half_cells + 1;
    }
    if pde.delta_width > 0.0 {
        grid.delta_width = Some(pde.delta_width);
    }
    if want_snapshots {
        grid.output_times = r.ts.clone();
    }
    Ok(grid)
}
