//! wasm-bindgen bindings behind `www/index.html`. Every export returns a
//! flat `Float64Array`; errors come back as strings.

use std::sync::Arc;

use halfline::evolve::{evolve, EvolveConfig};
use halfline::orbits::{continue_branch, BranchConfig, OrbitGrid};
use halfline::selfsim::{similarity_spectrum, similarity_stationary_profile, BoundaryCoefficient};
use halfline::{Field, Grid1D, Params, Stretching};
use wasm_bindgen::prelude::*;

const MAX_TRACE_POINTS: usize = 400;

fn text(e: halfline::Error) -> String {
    e.to_string()
}

/// Boundary value u(0, t) from the affine datum u0(x) = g(0)·x, returned as
/// interleaved (t, u) pairs.
#[wasm_bindgen]
pub fn boundary_trace(c: f64, theta: f64, t_end: f64) -> Result<Vec<f64>, String> {
    if !(t_end > 0.0 && t_end <= 200.0) {
        return Err("t_end must lie in (0, 200]".into());
    }
    let params = Params::cosine(c, theta).map_err(text)?;
    let length = if c > 0.0 { params.default_length() } else { 6.0 * t_end.sqrt() + 10.0 };
    let grid = Arc::new(Grid1D::new(length, 300, Stretching::TanhClustered { beta: 2.0 }).map_err(text)?);
    let slope = params.flux.value(0.0);
    let u0 = Field::from_fn(grid, |x| slope * x).map_err(text)?;
    let dt = (t_end / 4000.0).max(1e-3);
    let tr = evolve(&params, &u0, &EvolveConfig::new(dt, t_end)).map_err(text)?;
    let stride = (tr.boundary_trace.len() / MAX_TRACE_POINTS).max(1);
    Ok(tr.boundary_trace.iter().step_by(stride).flat_map(|p| [p.t, p.u]).collect())
}

/// Period T(θ) along the orbit branch from θ = 0, as interleaved (θ, T)
/// pairs. Stops early if continuation fails.
#[wasm_bindgen]
pub fn period_curve(c: f64, theta_max: f64, count: usize) -> Result<Vec<f64>, String> {
    if !(c > 0.0 && theta_max > 0.0 && theta_max < 1.0 && (2..=40).contains(&count)) {
        return Err("need c > 0, 0 < theta_max < 1 and 2 <= count <= 40".into());
    }
    let thetas: Vec<f64> = (0..count).map(|k| theta_max * k as f64 / (count - 1) as f64).collect();
    let grid = OrbitGrid::for_params(&Params::cosine(c, 0.0).map_err(text)?, c, 150);
    let mut cfg = BranchConfig::new(c, grid);
    cfg.steps_per_period = 600;
    let res = continue_branch(c, &thetas, &cfg).map_err(text)?;
    Ok(res.points.iter().flat_map(|p| [p.theta, p.orbit.period]).collect())
}

/// Stationary similarity profile as interleaved (ξ, V) pairs.
#[wasm_bindgen]
pub fn similarity_profile(xi_max: f64) -> Result<Vec<f64>, String> {
    let p = similarity_stationary_profile(xi_max, 400).map_err(text)?;
    Ok(p.xi.iter().zip(&p.v).flat_map(|(&x, &v)| [x, v]).collect())
}

/// Leading eigenvalues of the linearization at the profile, extrapolated
/// over a three-level ladder; `beta` replaces the boundary coefficient
/// when finite.
#[wasm_bindgen]
pub fn similarity_eigenvalues(beta: f64, count: usize) -> Result<Vec<f64>, String> {
    let bc = if beta.is_finite() { BoundaryCoefficient::Custom(beta) } else { BoundaryCoefficient::Profile };
    let rep = similarity_spectrum(&[200, 400, 800], 20.0, bc, count.clamp(1, 8)).map_err(text)?;
    Ok(rep.extrapolated)
}
