//! `solve`: analytic route on the output grid.
//!
//! Emits `field.csv` (`t,x,p_analytic,ilt_discrepancy`) and
//! `summary.json` carrying the full configuration echo, inversion flags,
//! the survival curve, and the worst closure residual sampled on the
//! inversion's own Laplace nodes.

use std::path::Path;

use serde::Serialize;
use sinklab_core::solve::{field_grid, route_for, survival_curve_analytic};

use super::{closure_residual_max, ensure_out_dir, route_label};
use crate::config::RunConfig;
use crate::output::{csv_row, fmt_float, write_json, write_text};
use crate::CliError;

#[derive(Serialize)]
struct SolveSummary {
    command: &'static str,
    config: RunConfig,
    route: &'static str,
    closure_residual_max: f64,
    ilt: IltSummary,
    survival: Vec<SurvivalRow>,
    /// `null` when the survival invariants (bounds, monotone decay under
    /// an absorbing sink) hold; otherwise the violation message.
    survival_invariant_violation: Option<String>,
}

#[derive(Serialize)]
struct IltSummary {
    flagged_count: usize,
    max_discrepancy: f64,
    /// First few flagged cells, for diagnosis without re-running.
    flags: Vec<FlaggedCell>,
}

#[derive(Serialize)]
struct FlaggedCell {
    t: f64,
    /// Position for field cells; absent for survival values.
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    discrepancy: f64,
}

#[derive(Serialize)]
struct SurvivalRow {
    t: f64,
    s: f64,
    discrepancy: f64,
    flagged: bool,
}

const MAX_REPORTED_FLAGS: usize = 64;

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let r = cfg.resolve()?;
    let route = route_for(&r.params, &r.sink)?;
    let field = field_grid(&r.params, &r.sink, r.x0, &r.ts, &r.xs, &r.solve)?;
    let (curve, surv_checks) = survival_curve_analytic(&r.params, &r.sink, r.x0, &r.ts, &r.solve)?;
    let residual_max = closure_residual_max(&r)?;

    ensure_out_dir(out)?;

    let mut csv = String::from("t,x,p_analytic,ilt_discrepancy\n");
    let mut flags = Vec::new();
    let mut flagged_count = 0usize;
    let mut max_discrepancy = 0.0f64;
    for (i, &t) in r.ts.iter().enumerate() {
        for (j, &x) in r.xs.iter().enumerate() {
            let v = field[i][j];
            max_discrepancy = max_discrepancy.max(v.discrepancy);
            if v.flagged {
                flagged_count += 1;
                if flags.len() < MAX_REPORTED_FLAGS {
                    flags.push(FlaggedCell {
                        t,
                        x: Some(x),
                        discrepancy: v.discrepancy,
                    });
                }
            }
            csv.push_str(&csv_row(&[
                fmt_float(t),
                fmt_float(x),
                fmt_float(v.value),
                fmt_float(v.discrepancy),
            ]));
        }
    }
    write_text(&out.join("field.csv"), &csv)?;

    let mut survival = Vec::with_capacity(r.ts.len());
    for (i, &t) in r.ts.iter().enumerate() {
        let v = surv_checks[i];
        max_discrepancy = max_discrepancy.max(v.discrepancy);
        if v.flagged {
            flagged_count += 1;
            if flags.len() < MAX_REPORTED_FLAGS {
                flags.push(FlaggedCell {
                    t,
                    x: None,
                    discrepancy: v.discrepancy,
                });
            }
        }
        survival.push(SurvivalRow {
            t,
            s: v.value,
            discrepancy: v.discrepancy,
            flagged: v.flagged,
        });
    }

    let sink_nonnegative = r.sink.strength(*r.ts.last().unwrap()) >= 0.0;
    let survival_invariant_violation = curve
        .check_invariants(r.params.sigma, sink_nonnegative)
        .err()
        .map(|e| e.to_string());

    let summary = SolveSummary {
        command: "solve",
        config: cfg.clone(),
        route: route_label(route),
        closure_residual_max: residual_max,
        ilt: IltSummary {
            flagged_count,
            max_discrepancy,
            flags,
        },
        survival,
        survival_invariant_violation,
    };
    write_json(&out.join("summary.json"), &summary)
}
