//! End-to-end tests of the `sinklab` binary: output contracts,
//! determinism, sweep semantics, and the error/exit-code protocol.

use std::path::Path;
use std::process::Output;

fn run(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_sinklab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_sinklab"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_cfg(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap()
}

/// Stderr of a failed invocation must be one machine-readable JSON
/// object tagged with the exit code.
fn error_json(out: &Output, want_code: i32) -> serde_json::Value {
    assert_eq!(
        out.status.code(),
        Some(want_code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is a JSON object");
    assert_eq!(v["error"]["exit_code"].as_i64(), Some(want_code as i64));
    assert!(v["error"]["kind"].is_string());
    assert!(v["error"]["message"].is_string());
    v
}

const SMALL_SOLVE: &str = r#"
[sink]
law = "constant"
alpha0 = 0.5

[grid]
t = [0.3, 0.7, 1.2]
x = [-0.5, 0.0, 0.5]
"#;

// -------------------------------------------------------------------
// solve
// -------------------------------------------------------------------

#[test]
fn solve_writes_field_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_SOLVE);
    let out_dir = dir.path().join("out");
    let out = run(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let field = read(&out_dir.join("field.csv"));
    let lines: Vec<&str> = field.lines().collect();
    assert_eq!(lines[0], "t,x,p_analytic,ilt_discrepancy");
    assert_eq!(lines.len(), 1 + 3 * 3, "one row per (t, x) cell");

    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["command"], "solve");
    assert_eq!(summary["route"], "complex");
    let residual = summary["closure_residual_max"].as_f64().unwrap();
    assert!(residual < 1e-8, "closure residual {residual}");
    let surv = summary["survival"].as_array().unwrap();
    assert_eq!(surv.len(), 3);
    for row in surv {
        let s = row["s"].as_f64().unwrap();
        assert!(s > 0.0 && s < 1.0, "absorbing sink keeps 0 < S < 1: {s}");
    }
    assert!(summary["survival_invariant_violation"].is_null());
}

#[test]
fn solve_output_is_byte_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_SOLVE);
    let mut artifacts: Vec<(String, String)> = Vec::new();
    for (label, threads) in [("a", "1"), ("b", "3"), ("c", "1")] {
        let out_dir = dir.path().join(label);
        let out = run_env(
            &["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()],
            &[("SINKLAB_THREADS", threads)],
        );
        assert!(out.status.success());
        artifacts.push((read(&out_dir.join("field.csv")), read(&out_dir.join("summary.json"))));
    }
    assert_eq!(artifacts[0], artifacts[1], "1 vs 3 threads");
    assert_eq!(artifacts[0], artifacts[2], "repeat run");
}

#[test]
fn zero_strength_expdecay_matches_no_sink_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let grid = "\n[grid]\nt = [0.4, 1.0]\nx = [0.0, 0.5]\n";
    let cfg_none = write_cfg(dir.path(), &format!("[sink]\nlaw = \"none\"\n{grid}"));
    let out_none = dir.path().join("none");
    assert!(run(&["solve", "--config", &cfg_none, "--out", out_none.to_str().unwrap()])
        .status
        .success());

    let cfg_zero = dir.path().join("zero.toml");
    std::fs::write(
        &cfg_zero,
        format!("[sink]\nlaw = \"exp_decay\"\nbeta = 0.0\nalpha_decay = 1.0\n{grid}"),
    )
    .unwrap();
    let out_zero = dir.path().join("zero");
    assert!(run(&[
        "solve",
        "--config",
        cfg_zero.to_str().unwrap(),
        "--out",
        out_zero.to_str().unwrap()
    ])
    .status
    .success());

    assert_eq!(
        read(&out_none.join("field.csv")),
        read(&out_zero.join("field.csv")),
        "beta = 0 must degenerate to the sink-free field"
    );
}

#[test]
fn set_overrides_win_over_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_SOLVE);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "solve",
        "--config",
        &cfg,
        "--set",
        "sink.alpha0=0.9",
        "--set",
        "grid.t=[0.5]",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["config"]["sink"]["alpha0"].as_f64(), Some(0.9));
    assert_eq!(summary["survival"].as_array().unwrap().len(), 1);
}

// -------------------------------------------------------------------
// oracle
// -------------------------------------------------------------------

#[test]
fn oracle_reports_flux_identity_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"
[sink]
law = "constant"
alpha0 = 0.5

[grid]
t = [0.5, 1.0]
x = [-0.5, 0.0, 0.5]

[pde]
dx = 0.05
dt = 0.004
delta_width = 0.05
"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["oracle", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let field = read(&out_dir.join("field.csv"));
    let lines: Vec<&str> = field.lines().collect();
    assert_eq!(lines[0], "t,x,p_oracle,s,j");
    assert_eq!(lines.len(), 1 + 2 * 3);

    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["command"], "oracle");
    assert!(summary["grid"]["nx"].as_u64().unwrap() > 100);
    let rel = summary["flux_identity"]["max_relative_residual"]
        .as_f64()
        .unwrap();
    assert!(rel < 1e-3, "flux identity relative residual {rel}");
    assert!(summary["mc"].is_null(), "mc off by default");
}

#[test]
fn oracle_runs_monte_carlo_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"
[sink]
law = "constant"
alpha0 = 0.5

[grid]
t = [0.5]
x = [0.0]

[pde]
dx = 0.05
dt = 0.004

[mc]
n_paths = 400
seed = 7
dt = 0.002
delta_width = 0.2
"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["oracle", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out_dir.join("summary.json"));
    let mc = &summary["mc"];
    assert_eq!(mc["n_paths"].as_u64(), Some(400));
    let rows = mc["survival"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let s = rows[0]["s"].as_f64().unwrap();
    let se = rows[0]["stderr"].as_f64().unwrap();
    assert!(s > 0.0 && s <= 1.0 && se > 0.0);
}

// -------------------------------------------------------------------
// compare
// -------------------------------------------------------------------

const SMALL_COMPARE: &str = r#"
[sink]
law = "constant"
alpha0 = 0.5

[grid]
t = [0.5, 1.0]
x = [0.0]

[pde]
dx = 0.05
dt = 0.004

[volterra]
dt = 0.005
"#;

#[test]
fn compare_routes_agree_and_emit_diff() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_COMPARE);
    let out_dir = dir.path().join("out");
    let out = run(&["compare", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["command"], "compare");
    assert_eq!(summary["agree"], true);
    for route in ["analytic", "volterra", "cn"] {
        assert_eq!(summary["routes"][route]["status"], "ok", "route {route}");
    }
    let metrics = summary["metrics"].as_array().unwrap();
    assert_eq!(metrics.len(), 6, "2 observables x 3 pairs");
    for m in metrics {
        assert!(m["sup"].as_f64().unwrap() < 1e-2);
        assert_eq!(m["pass"], true);
    }
    assert!(!summary["fidelity"]["blocks"].as_array().unwrap().is_empty());

    let diff = read(&out_dir.join("diff.csv"));
    let lines: Vec<&str> = diff.lines().collect();
    assert_eq!(
        lines[0],
        "t,p0_analytic,p0_volterra,p0_cn,s_analytic,s_volterra,s_cn,\
         d_p0_analytic_volterra,d_p0_analytic_cn,d_p0_volterra_cn,\
         d_s_analytic_volterra,d_s_analytic_cn,d_s_volterra_cn"
    );
    assert_eq!(lines.len(), 1 + 2);
}

#[test]
fn compare_survives_one_route_failing() {
    // x0 = 0 puts the source on the sink node; the Volterra marcher
    // rejects that while the other two routes still run.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_COMPARE);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "compare",
        "--config",
        &cfg,
        "--set",
        "initial.x0=0.0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["routes"]["analytic"]["status"], "ok");
    assert_eq!(summary["routes"]["cn"]["status"], "ok");
    assert_eq!(summary["routes"]["volterra"]["status"], "error");
    assert!(summary["routes"]["volterra"]["message"].is_string());
    // Pairs involving the dead route are gone; analytic vs cn remains.
    let metrics = summary["metrics"].as_array().unwrap();
    assert_eq!(metrics.len(), 2);
    let diff = read(&out_dir.join("diff.csv"));
    let first_row = diff.lines().nth(1).unwrap();
    assert!(first_row.contains(",,"), "dead-route cells stay empty");
}

#[test]
fn compare_fails_with_artifacts_when_all_routes_fail() {
    // Each override disables one route: sigma = +1 puts the constant-law
    // pole right of the inversion contour (analytic), x0 = 0 puts the
    // source on the sink node (volterra), and a pde window shorter than
    // the requested times starves the oracle (cn).
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_COMPARE);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "compare",
        "--config",
        &cfg,
        "--set",
        "params.sigma=1.0",
        "--set",
        "initial.x0=0.0",
        "--set",
        "pde.t_max=0.1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let v = error_json(&out, 3);
    assert_eq!(v["error"]["kind"], "numerical");
    // Artifacts are still written for the post-mortem.
    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["agree"], false);
    for route in ["analytic", "volterra", "cn"] {
        assert_eq!(summary["routes"][route]["status"], "error");
    }
    assert!(out_dir.join("diff.csv").exists());
}

// -------------------------------------------------------------------
// sweep
// -------------------------------------------------------------------

#[test]
fn sweep_scans_one_axis_in_declared_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"
[sink]
law = "constant"
alpha0 = 0.5

[grid]
t = [1.0]
x = [0.0]

[sweep.values]
"sink.alpha0" = [0.25, 0.5, 1.0, 2.0]
"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let sweep = read(&out_dir.join("sweep.csv"));
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "sink.alpha0,status,message,S(t=1)");
    assert_eq!(lines.len(), 1 + 4);

    let mut survivals = Vec::new();
    for (line, want_alpha) in lines[1..].iter().zip(["2.5", "5", "1", "2"]) {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(cells[0].starts_with(want_alpha), "axis order: {line}");
        assert_eq!(cells[1], "ok");
        survivals.push(cells[3].parse::<f64>().unwrap());
    }
    for w in survivals.windows(2) {
        assert!(w[1] < w[0], "stronger sink absorbs more: {survivals:?}");
    }

    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["cells"].as_u64(), Some(4));
    assert_eq!(summary["ok"].as_u64(), Some(4));
    assert_eq!(summary["failed"].as_u64(), Some(0));
}

#[test]
fn sweep_crosses_axes_row_major_and_isolates_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"
[sink]
law = "constant"
alpha0 = 0.5

[grid]
t = [1.0]
x = [0.0]

[sweep.values]
"params.sigma" = [-1.0, 1.0]
"sink.law" = ["constant", "exp_decay"]
"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let sweep = read(&out_dir.join("sweep.csv"));
    let lines: Vec<&str> = sweep.lines().collect();
    // Axes are ordered by path, so params.sigma is the outer loop.
    assert_eq!(lines[0], "params.sigma,sink.law,status,message,S(t=1)");
    assert_eq!(lines.len(), 1 + 4);
    let rows: Vec<Vec<&str>> = lines[1..].iter().map(|l| l.split(',').collect()).collect();
    assert_eq!((rows[0][1], rows[1][1]), ("constant", "exp_decay"));
    assert!(rows[0][0].starts_with("-1") && rows[1][0].starts_with("-1"));
    assert!(rows[2][0].starts_with('1') && rows[3][0].starts_with('1'));

    // sigma = -1 rows succeed; sigma = +1 constant is rejected while
    // exp_decay (a gain) still solves, with S > 1.
    assert_eq!(rows[0][2], "ok");
    assert_eq!(rows[1][2], "ok");
    assert!(rows[2][2].starts_with("error("), "{:?}", rows[2]);
    assert_eq!(rows[2][4], "");
    assert_eq!(rows[3][2], "ok");
    assert!(rows[3][4].parse::<f64>().unwrap() > 1.0);

    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["ok"].as_u64(), Some(3));
    assert_eq!(summary["failed"].as_u64(), Some(1));
}

#[test]
fn sweep_with_no_axes_emits_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "[grid]\nt = [1.0]\n");
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let sweep = read(&out_dir.join("sweep.csv"));
    assert_eq!(sweep, "status,message,S(t=1)\n");
}

#[test]
fn sweep_rejects_grid_axes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "[sweep.values]\n\"grid.t_max\" = [1.0, 2.0]\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    let v = error_json(&out, 2);
    assert_eq!(v["error"]["kind"], "config");
}

// -------------------------------------------------------------------
// selftest
// -------------------------------------------------------------------

#[test]
fn selftest_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["selftest", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("ok ")).count() >= 6);
    assert!(!stdout.contains("FAIL"));

    let report = json(&out_dir.join("selftest.json"));
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 6);
}

// -------------------------------------------------------------------
// error protocol
// -------------------------------------------------------------------

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "[params]\nd = 1.0\nomeag = 2.0\n");
    let out = run(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let v = error_json(&out, 2);
    assert_eq!(v["error"]["kind"], "config");
    assert!(v["error"]["message"].as_str().unwrap().contains("omeag"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "solve",
        "--config",
        dir.path().join("absent.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let v = error_json(&out, 2);
    assert_eq!(v["error"]["kind"], "config");
}

#[test]
fn repulsive_constant_sink_is_rejected_as_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_SOLVE);
    let out = run(&[
        "solve",
        "--config",
        &cfg,
        "--set",
        "params.sigma=1.0",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    let v = error_json(&out, 2);
    assert_eq!(v["error"]["kind"], "config");
}

#[test]
fn series_divergence_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"
[sink]
law = "exp_decay"
beta = 40.0
alpha_decay = 1.0

[grid]
t = [1.0]
x = [0.0]

[closure]
depth_max = 3
"#,
    );
    let out = run(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    let v = error_json(&out, 3);
    assert_eq!(v["error"]["kind"], "numerical");
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for sub in ["solve", "oracle", "compare", "sweep", "selftest"] {
        assert!(stdout.contains(sub), "--help must list {sub}");
    }
}
