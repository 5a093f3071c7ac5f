//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; the plain functions behind them are usable natively.

use gapscope_core::circle::{three_gap_report, CircleMetric, Rotation};
use gapscope_core::geodesic::{integrate_geodesic, sample_geodesic, surface_nnd, Surface, V3};
use gapscope_core::torus::{many_gaps_construction, Perturbation};
use gapscope_core::{ClusterPolicy, GapError, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Trajectory points sent to the page at most.
const MAX_TRACE: usize = 4000;

/// Orbit `{i p mod 1 : i = 0..=n}` with its gap and NND spectra.
pub fn three_gap_json(p: &str, n: usize) -> Result<Value> {
    let rotation = Rotation::parse(p)?;
    let report = three_gap_report(rotation, n, CircleMetric::Arc)?;
    let step = rotation.reduced().to_f64();
    let points: Vec<f64> = (0..=n).map(|i| (i as f64 * step).rem_euclid(1.0)).collect();
    Ok(json!({ "report": report, "points": points }))
}

/// Many-gaps certificate for distinct odd primes given as `"3,5"`, with the
/// orbit in floating point for plotting.
pub fn torus_gaps_json(primes: &str) -> Result<Value> {
    let primes: Vec<u64> = primes
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| GapError::Parse(format!("bad prime {p:?}"))))
        .collect::<Result<_>>()?;
    let cert = many_gaps_construction(&primes, Perturbation::Auto)?;
    if cert.n_points > 20_000 {
        return Err(GapError::Domain("the demo draws at most 20000 orbit points".into()));
    }
    let points: Vec<Vec<f64>> = cert.orbit().points.iter().map(|p| p.to_f64()).collect();
    Ok(json!({ "certificate": cert, "points": points }))
}

/// Geodesic from the projection of `start`, leaving at angle `theta` in the
/// tangent plane, sampled `n + 1` times at spacing `step`.
pub fn geodesic_json(surface: &str, start: [f64; 3], theta: f64, step: f64, n: usize) -> Result<Value> {
    let surface: Surface = surface.parse()?;
    let x0 = surface.project(&V3::from(start))?;
    let normal = surface.normal(&x0)?;
    let helper = if normal.z.abs() < 0.9 { V3::z() } else { V3::x() };
    let e1 = normal.cross(&helper).normalize();
    let e2 = normal.cross(&e1);
    let v0 = e1 * theta.cos() + e2 * theta.sin();
    let traj = integrate_geodesic(&surface, &x0, &v0, step * n as f64, 1e-3)?;
    let samples = sample_geodesic(&traj, step, n)?;
    let nnd = surface_nnd(&surface, &samples, ClusterPolicy::default())?;
    let stride = traj.positions.len().div_ceil(MAX_TRACE).max(1);
    let trace: Vec<[f64; 3]> = traj.positions.iter().step_by(stride).map(|p| [p.x, p.y, p.z]).collect();
    let samples: Vec<[f64; 3]> = samples.iter().map(|p| [p.x, p.y, p.z]).collect();
    Ok(json!({
        "surface": surface.label(),
        "trace": trace,
        "samples": samples,
        "nnd_count": nnd.spectrum.count(),
        "nnd_classes": nnd.spectrum.class_reals(),
        "warnings": nnd.warnings,
    }))
}

fn to_js(result: Result<Value>) -> std::result::Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn three_gap(p: &str, n: usize) -> std::result::Result<String, JsError> {
    to_js(three_gap_json(p, n))
}

#[wasm_bindgen]
pub fn torus_gaps(primes: &str) -> std::result::Result<String, JsError> {
    to_js(torus_gaps_json(primes))
}

#[wasm_bindgen]
pub fn geodesic(surface: &str, x: f64, y: f64, z: f64, theta: f64, step: f64, n: usize) -> std::result::Result<String, JsError> {
    to_js(geodesic_json(surface, [x, y, z], theta, step, n))
}
