//! Run configuration: one TOML file plus typed `--set KEY=VALUE` overrides.
//!
//! Every field has a default, unknown keys are rejected, and the fully
//! defaulted configuration is echoed into each summary so a run can be
//! reproduced from its outputs alone. Overrides are applied to the raw
//! TOML tree *before* deserialization, so `--set` and file edits are
//! interchangeable and the sweep driver can reuse the same machinery for
//! per-cell parameter injection.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sinklab_core::closure::ClosureOpts;
use sinklab_core::fidelity::FidelityScales;
use sinklab_core::ilt::IltConfig;
use sinklab_core::solve::SolveConfig;
use sinklab_core::{ModelParams, SinkSpec};

use crate::CliError;

/// Top-level run configuration, one section per concern.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSection,
    pub sink: SinkSection,
    pub initial: InitialSection,
    pub grid: GridSection,
    pub ilt: IltSection,
    pub closure: ClosureSection,
    pub solve: SolveSection,
    pub pde: PdeSection,
    pub volterra: VolterraSection,
    pub mc: McSection,
    pub compare: CompareSection,
    pub sweep: SweepSection,
}

/// Model parameters of the drift-diffusion equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    /// Diffusion coefficient `D`.
    pub d: f64,
    /// Drift strength `omega` of the V potential `U(x) = omega |x|`.
    pub omega: f64,
    /// Sink sign: `-1` absorbs probability, `+1` injects it.
    pub sigma: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            d: 1.0,
            omega: 1.0,
            sigma: -1.0,
        }
    }
}

/// Sink law selection. `law` picks the time dependence; only the scale
/// fields belonging to the chosen law are read, so a sweep can switch
/// laws without scrubbing the other scales from the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinkSection {
    /// One of `none`, `constant`, `linear`, `inverse_time`, `exp_decay`.
    pub law: String,
    /// Rate for `law = "constant"`: `k(t) = alpha0`.
    pub alpha0: f64,
    /// Ramp for `law = "linear"`: `k(t) = alpha1 t`.
    pub alpha1: f64,
    /// Strength for `law = "inverse_time"`: `k(t) = alpha / t` past `t_on`.
    pub alpha: f64,
    /// Gating time for the inverse law; `0` picks an automatic value well
    /// below the relaxation time.
    pub t_on: f64,
    /// Amplitude for `law = "exp_decay"`: `k(t) = beta exp(-alpha_decay t)`.
    pub beta: f64,
    /// Decay rate for `law = "exp_decay"`.
    pub alpha_decay: f64,
}

impl Default for SinkSection {
    fn default() -> Self {
        SinkSection {
            law: "constant".to_string(),
            alpha0: 0.5,
            alpha1: 0.5,
            alpha: 0.3,
            t_on: 0.01,
            beta: 0.5,
            alpha_decay: 1.0,
        }
    }
}

/// Initial condition: a unit point mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub x0: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection { x0: 0.5 }
    }
}

/// Output grid. An explicit `t` list wins; otherwise `t_count` points
/// are spaced uniformly over `[t_min, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Explicit output times (strictly increasing, all > 0).
    pub t: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    /// Field positions for `solve`/`oracle` CSV output.
    pub x: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            t: Vec::new(),
            t_min: 0.2,
            t_max: 5.0,
            t_count: 25,
            x: vec![-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0],
        }
    }
}

impl GridSection {
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        let ts = if !self.t.is_empty() {
            self.t.clone()
        } else {
            if self.t_count == 0 {
                return Err(CliError::config("grid.t_count must be positive"));
            }
            if !(self.t_min > 0.0) || !(self.t_max >= self.t_min) {
                return Err(CliError::config(format!(
                    "grid time range invalid: t_min = {}, t_max = {}",
                    self.t_min, self.t_max
                )));
            }
            linspace(self.t_min, self.t_max, self.t_count)
        };
        for w in ts.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CliError::config(format!(
                    "grid.t must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if ts.iter().any(|&t| !t.is_finite() || t <= 0.0) {
            return Err(CliError::config(
                "grid.t entries must be finite and > 0".to_string(),
            ));
        }
        Ok(ts)
    }

    pub fn positions(&self) -> Result<Vec<f64>, CliError> {
        if self.x.is_empty() {
            return Err(CliError::config("grid.x must list at least one position"));
        }
        if self.x.iter().any(|&x| !x.is_finite()) {
            return Err(CliError::config("grid.x entries must be finite"));
        }
        Ok(self.x.clone())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Inverse-transform controls.
///
/// `agreement_tol` governs the Talbot-vs-Stehfest flag on the complex
/// route. Transforms with a branch cut down the negative axis carry a
/// genuine Stehfest truncation error around 1e-5, so the shipped default
/// sits at 1e-4: tight enough to catch real inversion trouble, loose
/// enough that a healthy run is not drowned in flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IltSection {
    pub talbot_m: usize,
    pub stehfest_n: usize,
    pub agreement_tol: f64,
}

impl Default for IltSection {
    fn default() -> Self {
        IltSection {
            talbot_m: 32,
            stehfest_n: 14,
            agreement_tol: 1e-4,
        }
    }
}

/// Closure-solver controls (ODE laws and the exponential shift series).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosureSection {
    /// Upper starting point for the backward ODE integration; omit for
    /// an automatic choice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    pub ode_rel_tol: f64,
    pub depth_max: usize,
    pub tail_tol: f64,
    pub gating_quad: usize,
}

impl Default for ClosureSection {
    fn default() -> Self {
        let o = ClosureOpts::default();
        ClosureSection {
            s_max: o.s_max,
            ode_rel_tol: o.ode_rel_tol,
            depth_max: o.depth_max,
            tail_tol: o.tail_tol,
            gating_quad: o.gating_quad,
        }
    }
}

/// Batch-driver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    /// Flag threshold for the real-axis Stehfest order cross-check.
    pub order_gap_tol: f64,
    /// Worker threads; `0` reads `SINKLAB_THREADS`, falling back to the
    /// machine parallelism.
    pub threads: usize,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            order_gap_tol: 1e-2,
            threads: 0,
        }
    }
}

/// Crank-Nicolson oracle controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSection {
    pub dx: f64,
    pub dt: f64,
    /// Final time; `0` stretches to the last output time.
    pub t_max: f64,
    /// Domain half-width; `0` picks one holding the equilibrium tail.
    pub half_width: f64,
    /// Sink regularization width `h`; `0` keeps the solver default `2 dx`.
    /// Set `h = dx` to make the reported point flux `2 k(t) P(0,t)` and
    /// the discrete sink functional coincide (sharpest flux identity).
    pub delta_width: f64,
}

impl Default for PdeSection {
    fn default() -> Self {
        PdeSection {
            dx: 0.025,
            dt: 2e-3,
            t_max: 0.0,
            half_width: 0.0,
            delta_width: 0.0,
        }
    }
}

/// Integral-equation oracle controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolterraSection {
    /// Uniform marching step.
    pub dt: f64,
}

impl Default for VolterraSection {
    fn default() -> Self {
        VolterraSection { dt: 2.5e-3 }
    }
}

/// Monte Carlo controls; `n_paths = 0` disables the sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n_paths: usize,
    pub seed: u64,
    pub dt: f64,
    /// Kill-zone half-width; keep well above `sqrt(2 D dt)`.
    pub delta_width: f64,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            n_paths: 0,
            seed: 42,
            dt: 5e-4,
            delta_width: 0.2,
        }
    }
}

/// Route-comparison controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Per-observable sup-norm budget for a route pair to count as
    /// agreeing.
    pub tolerance: f64,
    /// Laplace points for the closed-form fidelity diagnostics.
    pub fidelity_s: Vec<f64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            tolerance: 1e-2,
            fidelity_s: vec![0.5, 1.0, 2.0],
        }
    }
}

/// Parameter sweep: dotted config paths mapped to value lists. The
/// Cartesian product runs in path-sorted, row-major order (first path
/// outermost), so output rows are deterministic.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub values: BTreeMap<String, Vec<toml::Value>>,
}

/// Validated, core-typed view of a configuration.
pub struct Resolved {
    pub params: ModelParams,
    pub sink: SinkSpec,
    pub x0: f64,
    pub ts: Vec<f64>,
    pub xs: Vec<f64>,
    pub solve: SolveConfig,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let params = ModelParams::new(self.params.d, self.params.omega, self.params.sigma)?;
        let sink = self.sink.resolve(&params)?;
        let x0 = self.initial.x0;
        if !x0.is_finite() {
            return Err(CliError::config("initial.x0 must be finite"));
        }
        let ts = self.grid.times()?;
        let xs = self.grid.positions()?;
        let solve = SolveConfig {
            ilt: IltConfig {
                talbot_m: self.ilt.talbot_m,
                stehfest_n: self.ilt.stehfest_n,
                agreement_tol: self.ilt.agreement_tol,
            },
            closure: ClosureOpts {
                s_max: self.closure.s_max,
                ode_rel_tol: self.closure.ode_rel_tol,
                depth_max: self.closure.depth_max,
                tail_tol: self.closure.tail_tol,
                gating_quad: self.closure.gating_quad,
            },
            threads: match self.solve.threads {
                0 => None,
                n => Some(n),
            },
            order_gap_tol: self.solve.order_gap_tol,
        };
        solve.ilt.validate()?;
        Ok(Resolved {
            params,
            sink,
            x0,
            ts,
            xs,
            solve,
        })
    }

    /// Scales handed to the closed-form fidelity diagnostics.
    pub fn fidelity_scales(&self) -> FidelityScales {
        FidelityScales {
            alpha0: self.sink.alpha0,
            alpha1: self.sink.alpha1,
            alpha: self.sink.alpha,
        }
    }
}

impl SinkSection {
    pub fn resolve(&self, params: &ModelParams) -> Result<SinkSpec, CliError> {
        let sink = match self.law.as_str() {
            "none" | "nosink" | "no_sink" => SinkSpec::NoSink,
            "constant" => SinkSpec::Constant {
                alpha0: self.alpha0,
            },
            "linear" => SinkSpec::Linear {
                alpha1: self.alpha1,
            },
            "inverse_time" => SinkSpec::InverseTime {
                alpha: self.alpha,
                t_on: if self.t_on > 0.0 {
                    self.t_on
                } else {
                    SinkSpec::default_t_on(params)
                },
            },
            "exp_decay" => SinkSpec::ExpDecay {
                beta: self.beta,
                alpha_decay: self.alpha_decay,
            },
            other => {
                return Err(CliError::config(format!(
                    "sink.law '{other}' is not one of none, constant, linear, \
                     inverse_time, exp_decay"
                )))
            }
        };
        sink.validate()?;
        Ok(sink)
    }
}

/// Read a TOML config file and apply `--set` overrides; returns both the
/// typed configuration and the raw (post-override) value tree so the
/// sweep driver can inject further per-cell overrides.
pub fn load_config(path: &Path, sets: &[String]) -> Result<(RunConfig, toml::Value), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| CliError::config(format!("config file {} is not valid TOML: {e}", path.display())))?;
    apply_sets(&mut value, sets)?;
    let cfg = config_from_value(&value)?;
    Ok((cfg, value))
}

/// Deserialize a raw TOML tree into a validated `RunConfig`.
pub fn config_from_value(value: &toml::Value) -> Result<RunConfig, CliError> {
    value
        .clone()
        .try_into()
        .map_err(|e| CliError::config(format!("config validation failed: {e}")))
}

/// Apply `KEY=VALUE` overrides (dotted paths) to a TOML tree.
pub fn apply_sets(root: &mut toml::Value, sets: &[String]) -> Result<(), CliError> {
    for spec in sets {
        let (path, raw) = spec.split_once('=').ok_or_else(|| {
            CliError::config(format!("--set expects KEY=VALUE, got '{spec}'"))
        })?;
        let value = parse_toml_literal(raw.trim());
        set_path(root, path.trim(), value)?;
    }
    Ok(())
}

/// Parse the right-hand side of a `--set`: anything TOML accepts as a
/// value (number, bool, string, array); bare words fall back to strings
/// so `--set sink.law=linear` works without shell-quoted quotes.
fn parse_toml_literal(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match probe.parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Split a dotted path into segments, honoring double-quoted keys
/// (`sweep.values."params.sigma"` has three segments).
fn split_path(path: &str) -> Result<Vec<String>, CliError> {
    let mut segs = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    for c in path.chars() {
        match c {
            '"' => in_quotes = !in_quotes,
            '.' if !in_quotes => segs.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    if in_quotes {
        return Err(CliError::config(format!(
            "--set path '{path}' has an unterminated quote"
        )));
    }
    segs.push(cur);
    if segs.iter().any(|s| s.is_empty()) {
        return Err(CliError::config(format!(
            "--set path '{path}' has an empty segment"
        )));
    }
    Ok(segs)
}

/// Insert `value` at a dotted path, creating intermediate tables.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), CliError> {
    let segs = split_path(path)?;
    let (last, parents) = segs.split_last().unwrap();
    let mut cur = root;
    for (i, seg) in parents.iter().enumerate() {
        let table = cur.as_table_mut().ok_or_else(|| {
            CliError::config(format!(
                "--set path '{path}': '{}' is not a table",
                segs[..=i].join(".")
            ))
        })?;
        cur = table
            .entry(seg.clone())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let table = cur.as_table_mut().ok_or_else(|| {
        CliError::config(format!(
            "--set path '{path}': parent of '{last}' is not a table"
        ))
    })?;
    table.insert(last.clone(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn empty_file_yields_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("[params]\nd = 1.0\ndee = 2.0\n");
        assert!(err.is_err());
        let err = toml::from_str::<RunConfig>("[paramz]\nd = 1.0\n");
        assert!(err.is_err());
    }

    #[test]
    fn set_overrides_apply_before_validation() {
        let mut v: toml::Value = "".parse().unwrap();
        apply_sets(
            &mut v,
            &[
                "sink.law=linear".to_string(),
                "sink.alpha1=0.75".to_string(),
                "grid.t=[0.5, 1.0]".to_string(),
                "params.d=2".to_string(),
            ],
        )
        .unwrap();
        let cfg = config_from_value(&v).unwrap();
        assert_eq!(cfg.sink.law, "linear");
        assert_eq!(cfg.sink.alpha1, 0.75);
        assert_eq!(cfg.grid.t, vec![0.5, 1.0]);
        assert_eq!(cfg.params.d, 2.0);
    }

    #[test]
    fn bad_set_paths_are_config_errors() {
        let mut v: toml::Value = "".parse().unwrap();
        assert!(apply_sets(&mut v, &["nokey".to_string()]).is_err());
        assert!(apply_sets(&mut v, &["a..b=1".to_string()]).is_err());
        assert!(apply_sets(&mut v, &["a.\"b=1".to_string()]).is_err());
        apply_sets(&mut v, &["params.d=1.5".to_string()]).unwrap();
        // A leaf cannot be descended through.
        assert!(apply_sets(&mut v, &["params.d.sub=1".to_string()]).is_err());
    }

    #[test]
    fn quoted_path_segments_keep_their_dots() {
        let mut v: toml::Value = "".parse().unwrap();
        apply_sets(
            &mut v,
            &["sweep.values.\"sink.alpha0\"=[0.1, 0.5]".to_string()],
        )
        .unwrap();
        let cfg = config_from_value(&v).unwrap();
        assert_eq!(cfg.sweep.values.len(), 1);
        assert!(cfg.sweep.values.contains_key("sink.alpha0"));
        assert_eq!(cfg.sweep.values["sink.alpha0"].len(), 2);
    }

    #[test]
    fn default_grid_is_uniform_and_positive() {
        let g = GridSection::default();
        let ts = g.times().unwrap();
        assert_eq!(ts.len(), 25);
        assert!((ts[0] - 0.2).abs() < 1e-15);
        assert!((ts[24] - 5.0).abs() < 1e-12);
        let step = ts[1] - ts[0];
        for w in ts.windows(2) {
            assert!(((w[1] - w[0]) - step).abs() < 1e-12);
        }
    }

    #[test]
    fn law_names_resolve() {
        let params = ModelParams::new(1.0, 1.0, -1.0).unwrap();
        let mut sec = SinkSection::default();
        for (law, want_trivial) in [
            ("none", true),
            ("constant", false),
            ("linear", false),
            ("inverse_time", false),
            ("exp_decay", false),
        ] {
            sec.law = law.to_string();
            let sink = sec.resolve(&params).unwrap();
            assert_eq!(sink.is_trivial(), want_trivial, "{law}");
        }
        sec.law = "bogus".to_string();
        assert!(sec.resolve(&params).is_err());
    }

    #[test]
    fn inverse_law_auto_gating_kicks_in_at_zero() {
        let params = ModelParams::new(1.0, 1.0, -1.0).unwrap();
        let mut sec = SinkSection::default();
        sec.law = "inverse_time".to_string();
        sec.t_on = 0.0;
        match sec.resolve(&params).unwrap() {
            SinkSpec::InverseTime { t_on, .. } => assert!(t_on > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn resolve_maps_thread_zero_to_auto() {
        let cfg = RunConfig::default();
        let r = cfg.resolve().unwrap();
        assert!(r.solve.threads.is_none());
        let mut cfg2 = cfg;
        cfg2.solve.threads = 3;
        assert_eq!(cfg2.resolve().unwrap().solve.threads, Some(3));
    }
}
