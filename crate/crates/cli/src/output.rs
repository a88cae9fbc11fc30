//! Deterministic file writers.
//!
//! CSV numbers carry 17 significant digits (`{:.16e}`), enough to
//! reconstruct the exact f64; identical configurations therefore re-emit
//! byte-identical files regardless of thread count or machine.

use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// 17-significant-digit float cell.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Quote a CSV cell if it holds a delimiter, quote, or newline.
pub fn csv_cell(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// Join pre-rendered cells into one CSV row.
pub fn csv_row(cells: &[String]) -> String {
    let mut row = cells
        .iter()
        .map(|c| csv_cell(c))
        .collect::<Vec<_>>()
        .join(",");
    row.push('\n');
    row
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

/// Pretty-printed JSON with a trailing newline. Field order follows the
/// struct definitions, so output is deterministic.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// Linear interpolation of a sampled series, clamped at the ends.
pub fn lerp_series(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    debug_assert_eq!(ts.len(), ys.len());
    if ts.is_empty() {
        return f64::NAN;
    }
    match ts.binary_search_by(|a| a.total_cmp(&t)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i >= ts.len() => ys[ts.len() - 1],
        Err(i) => {
            let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
            ys[i - 1] * (1.0 - w) + ys[i] * w
        }
    }
}
