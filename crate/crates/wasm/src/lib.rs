//! Browser bindings: a thin JSON-string facade over the solver so a
//! static page can drive it without any framework. Every operation
//! takes a JSON request and returns a JSON response; failures come back
//! as `{"error": "..."}` instead of aborting the module.
//!
//! The crate also builds as a plain rlib so the facade is testable on
//! the host; compile with `--target wasm32-unknown-unknown` (e.g. via
//! `wasm-pack build --target web`) to produce the browser module.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::wasm_bindgen;

use sinklab_core::observables::equilibrium_profile;
use sinklab_core::solve::{
    field_grid, origin_curve, route_for, survival_curve_analytic, IltRoute, SolveConfig,
};
use sinklab_core::volterra::volterra_p0;
use sinklab_core::{ModelParams, SinkSpec};

/// One request shape serves all three operations; each reads the
/// fields it needs and ignores the rest. Defaults reproduce the
/// reference scenario (V-potential, absorbing constant sink).
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
struct Request {
    d: f64,
    omega: f64,
    sigma: f64,
    x0: f64,
    law: String,
    alpha0: f64,
    alpha1: f64,
    alpha: f64,
    t_on: f64,
    beta: f64,
    alpha_decay: f64,
    /// Time-grid extent and resolution (survival / origin curves).
    t_max: f64,
    n: usize,
    /// Field-frame controls.
    t: f64,
    half_width: f64,
    nx: usize,
}

impl Default for Request {
    fn default() -> Self {
        Request {
            d: 1.0,
            omega: 1.0,
            sigma: -1.0,
            x0: 0.5,
            law: "constant".into(),
            alpha0: 0.5,
            alpha1: 0.5,
            alpha: 0.3,
            t_on: 0.01,
            beta: 0.5,
            alpha_decay: 1.0,
            t_max: 5.0,
            n: 60,
            t: 1.0,
            half_width: 3.0,
            nx: 121,
        }
    }
}

struct Scenario {
    params: ModelParams,
    sink: SinkSpec,
    x0: f64,
    cfg: SolveConfig,
}

impl Request {
    fn parse(text: &str) -> Result<Request, String> {
        serde_json::from_str(text).map_err(|e| format!("bad request: {e}"))
    }

    fn scenario(&self) -> Result<Scenario, String> {
        let params =
            ModelParams::new(self.d, self.omega, self.sigma).map_err(|e| e.to_string())?;
        let sink = match self.law.as_str() {
            "none" => SinkSpec::NoSink,
            "constant" => SinkSpec::Constant { alpha0: self.alpha0 },
            "linear" => SinkSpec::Linear { alpha1: self.alpha1 },
            "inverse_time" => SinkSpec::InverseTime {
                alpha: self.alpha,
                t_on: if self.t_on > 0.0 {
                    self.t_on
                } else {
                    SinkSpec::default_t_on(&params)
                },
            },
            "exp_decay" => SinkSpec::ExpDecay {
                beta: self.beta,
                alpha_decay: self.alpha_decay,
            },
            other => return Err(format!("unknown sink law {other:?}")),
        };
        sink.validate().map_err(|e| e.to_string())?;
        // Browser builds are single-threaded; force the serial path.
        let mut cfg = SolveConfig::default();
        cfg.threads = Some(1);
        Ok(Scenario {
            params,
            sink,
            x0: self.x0,
            cfg,
        })
    }

    fn time_grid(&self) -> Result<Vec<f64>, String> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(format!("t_max must be finite and > 0, got {}", self.t_max));
        }
        let n = self.n.clamp(2, 2000);
        Ok((1..=n).map(|k| self.t_max * k as f64 / n as f64).collect())
    }
}

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    let value = match result {
        Ok(body) => serde_json::to_value(body)
            .unwrap_or_else(|e| serde_json::json!({ "error": format!("serialization: {e}") })),
        Err(message) => serde_json::json!({ "error": message }),
    };
    value.to_string()
}

fn route_name(route: IltRoute) -> &'static str {
    match route {
        IltRoute::Complex => "complex",
        IltRoute::RealAxis => "real_axis",
    }
}

#[derive(Serialize)]
struct SurvivalResponse {
    t: Vec<f64>,
    s: Vec<f64>,
    route: &'static str,
    flagged: usize,
}

/// Survival curve `S(t)` for the configured law on a uniform grid.
#[wasm_bindgen]
pub fn survival_curve(request: &str) -> String {
    respond(Request::parse(request).and_then(|req| {
        let sc = req.scenario()?;
        let ts = req.time_grid()?;
        let route = route_for(&sc.params, &sc.sink).map_err(|e| e.to_string())?;
        let (curve, vals) = survival_curve_analytic(&sc.params, &sc.sink, sc.x0, &ts, &sc.cfg)
            .map_err(|e| e.to_string())?;
        Ok(SurvivalResponse {
            t: curve.t,
            s: curve.s,
            route: route_name(route),
            flagged: vals.iter().filter(|v| v.flagged).count(),
        })
    }))
}

#[derive(Serialize)]
struct FrameResponse {
    x: Vec<f64>,
    p: Vec<f64>,
    equilibrium: Vec<f64>,
    t: f64,
}

/// Field profile `P(x, t)` at one time, with the sink-free Boltzmann
/// profile alongside for the overlay.
#[wasm_bindgen]
pub fn field_frame(request: &str) -> String {
    respond(Request::parse(request).and_then(|req| {
        let sc = req.scenario()?;
        if !(req.t.is_finite() && req.t > 0.0) {
            return Err(format!("t must be finite and > 0, got {}", req.t));
        }
        if !(req.half_width.is_finite() && req.half_width > 0.0) {
            return Err(format!(
                "half_width must be finite and > 0, got {}",
                req.half_width
            ));
        }
        let nx = req.nx.clamp(3, 2001);
        let xs: Vec<f64> = (0..nx)
            .map(|k| -req.half_width + 2.0 * req.half_width * k as f64 / (nx - 1) as f64)
            .collect();
        let rows = field_grid(&sc.params, &sc.sink, sc.x0, &[req.t], &xs, &sc.cfg)
            .map_err(|e| e.to_string())?;
        let equilibrium = xs
            .iter()
            .map(|&x| equilibrium_profile(&sc.params, x).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        Ok(FrameResponse {
            p: rows[0].iter().map(|v| v.value).collect(),
            x: xs,
            equilibrium,
            t: req.t,
        })
    }))
}

#[derive(Serialize)]
struct RoutesResponse {
    t: Vec<f64>,
    analytic: Vec<f64>,
    volterra: Option<Vec<f64>>,
    volterra_error: Option<String>,
}

/// Origin curve `P(0, t)` from the analytic inversion, with the
/// independent integral-equation march overlaid when it applies.
#[wasm_bindgen]
pub fn origin_routes(request: &str) -> String {
    respond(Request::parse(request).and_then(|req| {
        let sc = req.scenario()?;
        let ts = req.time_grid()?;
        let analytic: Vec<f64> = origin_curve(&sc.params, &sc.sink, sc.x0, &ts, &sc.cfg)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|v| v.value)
            .collect();

        let steps = (ts.len() * 8).max(800);
        let dt = req.t_max / steps as f64;
        let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let (volterra, volterra_error) = match volterra_p0(&sc.params, &sc.sink, sc.x0, &grid) {
            Ok(p0) => {
                let sampled = ts.iter().map(|&t| interp(&grid, &p0, t)).collect();
                (Some(sampled), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(RoutesResponse {
            t: ts,
            analytic,
            volterra,
            volterra_error,
        })
    }))
}

fn interp(ts: &[f64], ys: &[f64], t: f64) -> f64 {
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
