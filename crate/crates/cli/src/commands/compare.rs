//! `compare`: run the analytic route, the Volterra integral-equation
//! oracle, and the Crank-Nicolson oracle on the same grid; report
//! per-observable sup and RMS gaps for every route pair, plus the
//! closed-form fidelity diagnostics.
//!
//! Routes fail independently (a failed route is recorded in the report
//! and its columns stay empty); the command itself fails only when *no*
//! route produces numbers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sinklab_core::fidelity::{fidelity_report, FidelityReport};
use sinklab_core::observables::sink_flux;
use sinklab_core::pde::cn_solve;
use sinklab_core::solve::{origin_curve, survival_curve_analytic};
use sinklab_core::volterra::volterra_p0;

use super::{build_cn_grid, ensure_out_dir};
use crate::config::{RunConfig, Resolved};
use crate::output::{csv_row, fmt_float, lerp_series, write_json, write_text};
use crate::CliError;

const ROUTES: [&str; 3] = ["analytic", "volterra", "cn"];

struct RouteSeries {
    p0: Vec<f64>,
    survival: Vec<f64>,
}

#[derive(Serialize)]
struct RouteStatus {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

#[derive(Serialize)]
struct PairMetric {
    observable: &'static str,
    pair: String,
    sup: f64,
    /// Root-mean-square gap over the output times.
    rms: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CompareSummary {
    command: &'static str,
    config: RunConfig,
    tolerance: f64,
    routes: BTreeMap<&'static str, RouteStatus>,
    metrics: Vec<PairMetric>,
    /// Every computed pair within tolerance (and at least one pair
    /// computed at all).
    agree: bool,
    fidelity: FidelityReport,
}

pub fn cmd_compare(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let r = cfg.resolve()?;

    let outcomes: Vec<(&'static str, Result<RouteSeries, CliError>)> = vec![
        ("analytic", analytic_route(&r)),
        ("volterra", volterra_route(&r, cfg.volterra.dt)),
        ("cn", cn_route(&r, cfg)),
    ];

    let mut routes = BTreeMap::new();
    let mut series: BTreeMap<&'static str, &RouteSeries> = BTreeMap::new();
    for (name, outcome) in &outcomes {
        match outcome {
            Ok(s) => {
                routes.insert(*name, RouteStatus {
                    status: "ok",
                    kind: None,
                    message: None,
                });
                series.insert(*name, s);
            }
            Err(e) => {
                routes.insert(*name, RouteStatus {
                    status: "error",
                    kind: Some(e.kind()),
                    message: Some(e.message().to_string()),
                });
            }
        }
    }

    let tol = cfg.compare.tolerance;
    let mut metrics = Vec::new();
    for (observable, extract) in [
        ("origin", (|s: &RouteSeries| &s.p0) as fn(&RouteSeries) -> &Vec<f64>),
        ("survival", |s: &RouteSeries| &s.survival),
    ] {
        for (ia, ib) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let (a, b) = (ROUTES[ia], ROUTES[ib]);
            if let (Some(sa), Some(sb)) = (series.get(a), series.get(b)) {
                let (ya, yb) = (extract(sa), extract(sb));
                let mut sup = 0.0f64;
                let mut sq = 0.0f64;
                for (va, vb) in ya.iter().zip(yb) {
                    let d = (va - vb).abs();
                    sup = sup.max(d);
                    sq += d * d;
                }
                let rms = (sq / ya.len() as f64).sqrt();
                metrics.push(PairMetric {
                    observable,
                    pair: format!("{a}_vs_{b}"),
                    sup,
                    rms,
                    pass: sup <= tol,
                });
            }
        }
    }
    let agree = !metrics.is_empty() && metrics.iter().all(|m| m.pass);

    let fidelity = fidelity_report(&r.params, r.x0, &cfg.compare.fidelity_s, &cfg.fidelity_scales())?;

    ensure_out_dir(out)?;
    write_text(&out.join("diff.csv"), &diff_csv(&r, &series))?;
    let summary = CompareSummary {
        command: "compare",
        config: cfg.clone(),
        tolerance: tol,
        routes,
        metrics,
        agree,
        fidelity,
    };
    write_json(&out.join("summary.json"), &summary)?;

    if series.is_empty() {
        let detail: Vec<String> = outcomes
            .iter()
            .map(|(name, o)| match o {
                Err(e) => format!("{name}: {}", e.message()),
                Ok(_) => unreachable!("series is empty"),
            })
            .collect();
        return Err(CliError::numerical(format!(
            "all comparison routes failed — {}",
            detail.join("; ")
        )));
    }
    Ok(())
}

fn diff_csv(r: &Resolved, series: &BTreeMap<&'static str, &RouteSeries>) -> String {
    let mut header = vec!["t".to_string()];
    for route in ROUTES {
        header.push(format!("p0_{route}"));
    }
    for route in ROUTES {
        header.push(format!("s_{route}"));
    }
    for (a, b) in [("analytic", "volterra"), ("analytic", "cn"), ("volterra", "cn")] {
        header.push(format!("d_p0_{a}_{b}"));
    }
    for (a, b) in [("analytic", "volterra"), ("analytic", "cn"), ("volterra", "cn")] {
        header.push(format!("d_s_{a}_{b}"));
    }
    let mut csv = csv_row(&header);

    let cell = |route: &str, pick: fn(&RouteSeries) -> &Vec<f64>, i: usize| -> String {
        series
            .get(route)
            .map(|s| fmt_float(pick(s)[i]))
            .unwrap_or_default()
    };
    let gap = |a: &str, b: &str, pick: fn(&RouteSeries) -> &Vec<f64>, i: usize| -> String {
        match (series.get(a), series.get(b)) {
            (Some(sa), Some(sb)) => fmt_float((pick(sa)[i] - pick(sb)[i]).abs()),
            _ => String::new(),
        }
    };
    let p0 = (|s: &RouteSeries| &s.p0) as fn(&RouteSeries) -> &Vec<f64>;
    let sv = (|s: &RouteSeries| &s.survival) as fn(&RouteSeries) -> &Vec<f64>;

    for (i, &t) in r.ts.iter().enumerate() {
        let mut cells = vec![fmt_float(t)];
        for route in ROUTES {
            cells.push(cell(route, p0, i));
        }
        for route in ROUTES {
            cells.push(cell(route, sv, i));
        }
        for (a, b) in [("analytic", "volterra"), ("analytic", "cn"), ("volterra", "cn")] {
            cells.push(gap(a, b, p0, i));
        }
        for (a, b) in [("analytic", "volterra"), ("analytic", "cn"), ("volterra", "cn")] {
            cells.push(gap(a, b, sv, i));
        }
        csv.push_str(&csv_row(&cells));
    }
    csv
}

fn analytic_route(r: &Resolved) -> Result<RouteSeries, CliError> {
    let p0 = origin_curve(&r.params, &r.sink, r.x0, &r.ts, &r.solve)?
        .iter()
        .map(|v| v.value)
        .collect();
    let (curve, _) = survival_curve_analytic(&r.params, &r.sink, r.x0, &r.ts, &r.solve)?;
    Ok(RouteSeries {
        p0,
        survival: curve.s,
    })
}

fn cn_route(r: &Resolved, cfg: &RunConfig) -> Result<RouteSeries, CliError> {
    let grid = build_cn_grid(r, &cfg.pde, false)?;
    let field = cn_solve(&r.params, &r.sink, r.x0, &grid)?;
    Ok(RouteSeries {
        p0: r.ts.iter().map(|&t| field.origin_at(t)).collect(),
        survival: r.ts.iter().map(|&t| field.survival_at(t)).collect(),
    })
}

/// March the origin integral equation on a uniform grid covering the
/// output window, then read the observables off by interpolation; the
/// survival comes from integrating the sink flux, `S(t) = 1 + sigma
/// int_0^t 2 k P(0,u) du` (trapezoid).
fn volterra_route(r: &Resolved, dt: f64) -> Result<RouteSeries, CliError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CliError::config(format!(
            "volterra.dt must be positive, got {dt}"
        )));
    }
    let t_last = *r.ts.last().unwrap();
    let n = (t_last / dt).ceil() as usize + 1;
    let tg: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let p0g = volterra_p0(&r.params, &r.sink, r.x0, &tg)?;
    let fluxg = sink_flux(&r.sink, &tg, &p0g)?;
    let mut sg = vec![1.0; n];
    for i in 1..n {
        sg[i] = sg[i - 1] + r.params.sigma * 0.5 * (fluxg[i - 1] + fluxg[i]) * dt;
    }
    Ok(RouteSeries {
        p0: r.ts.iter().map(|&t| lerp_series(&tg, &p0g, t)).collect(),
        survival: r.ts.iter().map(|&t| lerp_series(&tg, &sg, t)).collect(),
    })
}
