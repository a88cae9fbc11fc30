//! `sweep`: Cartesian product of config overrides, one row per cell.
//!
//! Axes are the dotted paths in `[sweep.values]`, taken in sorted path
//! order; the product unrolls row-major with the first path outermost,
//! so the CSV row order is deterministic. Every cell re-resolves the
//! full configuration, runs the analytic survival curve on the (fixed)
//! output grid, and reports failures inline in its own row instead of
//! aborting the sweep. An empty axis set yields a header-only CSV.

use std::path::Path;

use serde::Serialize;
use sinklab_core::solve::survival_curve_analytic;

use super::ensure_out_dir;
use crate::config::{config_from_value, set_path, RunConfig};
use crate::output::{csv_row, fmt_float, write_json, write_text};
use crate::CliError;

const MAX_CELLS: usize = 10_000;

#[derive(Serialize)]
struct SweepSummary {
    command: &'static str,
    config: RunConfig,
    axes: Vec<AxisEcho>,
    cells: usize,
    ok: usize,
    failed: usize,
}

#[derive(Serialize)]
struct AxisEcho {
    path: String,
    values: Vec<toml::Value>,
}

pub fn cmd_sweep(cfg: &RunConfig, base: &toml::Value, out: &Path) -> Result<(), CliError> {
    let axes: Vec<(&String, &Vec<toml::Value>)> = cfg.sweep.values.iter().collect();
    for (path, _) in &axes {
        if path.starts_with("grid.") || path.starts_with("sweep.") {
            return Err(CliError::config(format!(
                "sweep cannot vary '{path}': the output grid and the sweep \
                 definition are fixed for a run"
            )));
        }
    }
    let ts = cfg.grid.times()?;

    let cells: usize = if axes.is_empty() {
        0
    } else {
        axes.iter().map(|(_, v)| v.len()).product()
    };
    if cells > MAX_CELLS {
        return Err(CliError::config(format!(
            "sweep spans {cells} cells, above the {MAX_CELLS} cap"
        )));
    }

    let mut header: Vec<String> = axes.iter().map(|(p, _)| (*p).clone()).collect();
    header.push("status".to_string());
    header.push("message".to_string());
    for &t in &ts {
        header.push(format!("S(t={t})"));
    }
    let mut csv = csv_row(&header);

    let mut ok = 0usize;
    let mut failed = 0usize;
    let mut idx = vec![0usize; axes.len()];
    for cell in 0..cells {
        let mut rem = cell;
        for a in (0..axes.len()).rev() {
            let len = axes[a].1.len();
            idx[a] = rem % len;
            rem /= len;
        }
        let mut tree = base.clone();
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for (a, (path, values)) in axes.iter().enumerate() {
            set_path(&mut tree, path, values[idx[a]].clone())?;
            row.push(render_value(&values[idx[a]]));
        }
        match run_cell(&tree, &ts) {
            Ok(svals) => {
                ok += 1;
                row.push("ok".to_string());
                row.push(String::new());
                row.extend(svals.iter().map(|&s| fmt_float(s)));
            }
            Err(e) => {
                failed += 1;
                row.push(format!("error({})", e.kind()));
                row.push(e.message().to_string());
                row.extend(ts.iter().map(|_| String::new()));
            }
        }
        csv.push_str(&csv_row(&row));
    }

    ensure_out_dir(out)?;
    write_text(&out.join("sweep.csv"), &csv)?;
    let summary = SweepSummary {
        command: "sweep",
        config: cfg.clone(),
        axes: axes
            .iter()
            .map(|(p, v)| AxisEcho {
                path: (*p).clone(),
                values: (*v).clone(),
            })
            .collect(),
        cells,
        ok,
        failed,
    };
    write_json(&out.join("summary.json"), &summary)
}

fn run_cell(tree: &toml::Value, ts: &[f64]) -> Result<Vec<f64>, CliError> {
    let cfg = config_from_value(tree)?;
    let r = cfg.resolve()?;
    let (curve, _) = survival_curve_analytic(&r.params, &r.sink, r.x0, ts, &r.solve)?;
    Ok(curve.s)
}

fn render_value(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => fmt_float(*f),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
