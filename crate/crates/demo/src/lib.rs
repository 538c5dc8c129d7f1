//! Browser demo: sweeps, equilibrium profiles and a one-good explorer.
//!
//! Each exported function returns a JSON string; the plain Rust versions are
//! what the native tests exercise.

use aggsolve_core::aas::{build_uniform, BuildOptions, Method};
use aggsolve_core::game::{CostFamily, InteriorWitness, Mode, NonatomicGameSpec, PiecewiseAffine};
use aggsolve_core::oracle::{suite, we_oracle};
use aggsolve_core::solver::{solve, SolverConfig};
use aggsolve_core::sweep::SweepContext;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const CURVE_NUS: [usize; 6] = [2, 4, 8, 16, 32, 64];
const MAX_NU: usize = 256;
const ORACLE_SAMPLES: usize = 101;

#[derive(Serialize)]
struct CurvePoint {
    nu: usize,
    err_agg_sq: f64,
    bound_agg: f64,
    err_prof_sq: f64,
    bound_prof: f64,
    gate_ok: bool,
    iters: usize,
}

#[derive(Serialize)]
struct ProfilePlot {
    /// Cell edges and per-cell densities `x_i / mu_i` of the first coordinate.
    edges: Vec<f64>,
    step: Vec<f64>,
    theta: Vec<f64>,
    oracle: Vec<f64>,
    aggregate: Vec<f64>,
    oracle_aggregate: Vec<f64>,
    residual: f64,
}

#[derive(Serialize)]
struct Explorer {
    aggregate: f64,
    oracle_aggregate: f64,
    err_agg: f64,
    iters: usize,
}

fn parse_mode(mode: &str) -> Result<Mode, String> {
    mode.parse().map_err(|e: aggsolve_core::Error| e.to_string())
}

fn spec(name: &str) -> Result<NonatomicGameSpec, String> {
    suite::benchmark(name)
        .ok_or_else(|| format!("unknown benchmark `{name}`"))?
        .map_err(|e| e.to_string())
}

fn check_nu(nu: usize) -> Result<(), String> {
    if nu == 0 || nu > MAX_NU {
        return Err(format!("nu must be in 1..={MAX_NU}"));
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn benchmark_names_json() -> String {
    serde_json::to_string(&suite::NAMES).expect("static names")
}

/// Error and bound against nu for a packaged benchmark.
pub fn convergence_curve_json(name: &str, mode: &str) -> Result<String, String> {
    let cfg = SolverConfig::default().with_mode(parse_mode(mode)?);
    let ctx = SweepContext::new(spec(name)?).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = ctx
        .run(&CURVE_NUS, Method::Uniform, BuildOptions::default(), &cfg)
        .into_iter()
        .map(|r| CurvePoint {
            nu: r.nu,
            err_agg_sq: r.err_agg_sq,
            bound_agg: r.bound_agg,
            err_prof_sq: r.err_prof_sq,
            bound_prof: r.bound_prof,
            gate_ok: r.gate_ok,
            iters: r.iters,
        })
        .collect();
    json(&points)
}

/// Finite equilibrium as a step profile next to the Wardrop profile.
pub fn equilibrium_profile_json(name: &str, nu: usize, mode: &str) -> Result<String, String> {
    check_nu(nu)?;
    let spec = spec(name)?;
    let game = build_uniform(&spec, nu).map_err(|e| e.to_string())?;
    let res = solve(&game, &SolverConfig::default().with_mode(parse_mode(mode)?)).map_err(|e| e.to_string())?;
    let oracle = we_oracle(&spec).map_err(|e| e.to_string())?;
    let part = game.provenance().ok_or("game has no partition")?;
    let mut edges = vec![0.0];
    let mut step = Vec::new();
    for (i, cell) in part.cells.iter().enumerate() {
        edges.push(cell.intervals[0].end);
        step.push(res.profile.player(i)[0] / game.weight(i));
    }
    let theta: Vec<f64> = (0..ORACLE_SAMPLES)
        .map(|k| k as f64 / (ORACLE_SAMPLES - 1) as f64)
        .collect();
    let curve = theta.iter().map(|&t| oracle.profile_at(t)[0]).collect();
    json(&ProfilePlot {
        edges,
        step,
        theta,
        oracle: curve,
        aggregate: res.aggregate,
        oracle_aggregate: oracle.aggregate,
        residual: res.residual,
    })
}

/// One good, `X_theta = [0, 10]`, price `slope * X`, utility `b x - a x^2 / 2`.
pub fn lq_explorer_json(slope: f64, curvature: f64, marginal: f64, nu: usize, mode: &str) -> Result<String, String> {
    check_nu(nu)?;
    if !(slope > 0.0 && curvature > 0.0 && marginal.is_finite()) {
        return Err("need slope > 0, curvature > 0 and a finite marginal utility".into());
    }
    let mut parts = suite::lq1().map_err(|e| e.to_string())?.parts().clone();
    parts.name = "explorer".into();
    parts.cost = CostFamily::scalar(slope, 0.0);
    parts.params = PiecewiseAffine::constant(vec![curvature, marginal]);
    parts.witness = Some(InteriorWitness {
        slack: 4.5,
        profile: PiecewiseAffine::constant(vec![5.0]),
    });
    let spec = NonatomicGameSpec::new(parts).map_err(|e| e.to_string())?;
    let game = build_uniform(&spec, nu).map_err(|e| e.to_string())?;
    let res = solve(&game, &SolverConfig::default().with_mode(parse_mode(mode)?)).map_err(|e| e.to_string())?;
    let oracle = we_oracle(&spec).map_err(|e| e.to_string())?;
    json(&Explorer {
        aggregate: res.aggregate[0],
        oracle_aggregate: oracle.aggregate[0],
        err_agg: (res.aggregate[0] - oracle.aggregate[0]).abs(),
        iters: res.iterations,
    })
}

#[wasm_bindgen]
pub fn benchmark_names() -> String {
    benchmark_names_json()
}

#[wasm_bindgen]
pub fn convergence_curve(name: &str, mode: &str) -> Result<String, JsValue> {
    convergence_curve_json(name, mode).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn equilibrium_profile(name: &str, nu: usize, mode: &str) -> Result<String, JsValue> {
    equilibrium_profile_json(name, nu, mode).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn lq_explorer(slope: f64, curvature: f64, marginal: f64, nu: usize, mode: &str) -> Result<String, JsValue> {
    lq_explorer_json(slope, curvature, marginal, nu, mode).map_err(|e| JsValue::from_str(&e))
}
