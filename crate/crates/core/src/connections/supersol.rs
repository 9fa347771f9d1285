//! Explicit super-solutions started at 1/k² next to a zero of g at u = 0.
//!
//! The super-solution solves the linear problem with boundary slope
//! −(γ/k²)e^{λt}. Its boundary trace has the closed form
//! (1/k²)erfc(c√t/2) + (e^{λt}/k²)erf(γ√t) when the Robin coupling −(c/2)u
//! of the weighted formulation is left out; [`pde_crossing_time`] keeps it.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{Discretization, EvolveConfig, TracePoint, Trajectory};
use crate::grid::{Field, Grid1D, Stretching};
use crate::quad::GaussLegendre;
use crate::special::{erf, erfc};
use crate::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceVariant {
    /// erf(γ√t), the value of the defining integral.
    GammaSqrtT,
    /// erf(γ²√t), the alternative reading of the closed form.
    GammaSquaredSqrtT,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub k: f64,
    /// First time the closed-form trace (erf(γ√t)) reaches 1/k.
    pub t_k: f64,
    /// Same, with the trace from quadrature of the defining integral.
    pub t_k_quadrature: f64,
    /// Same, with erf(γ²√t).
    pub t_k_squared_variant: f64,
    /// Crossing time of the finite-difference solution of the linear
    /// problem including the Robin coupling.
    pub t_k_pde: Option<f64>,
    /// (1/λ) log(k − 1)
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersolLadder {
    pub c: f64,
    pub gprime0: f64,
    pub epsilon: f64,
    /// Largest δ with g(y) ≥ (g′(0) − ε)y on [0, δ], found by sampling.
    pub delta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub rows: Vec<LadderRow>,
    /// Least-squares slope of t_k against log k.
    pub log_slope: f64,
    /// 1/λ
    pub log_slope_expected: f64,
}

pub fn default_epsilon(gprime0: f64) -> f64 {
    0.05 * gprime0.abs().max(1.0)
}

/// λ and γ for the given speed, slope at the zero and ε.
pub fn ladder_rates(c: f64, gprime0: f64, eps: f64) -> Result<(f64, f64)> {
    let lambda = -0.25 * c * c + 4.0 * (0.5 * c - gprime0 + eps).powi(2);
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("growth rate λ = {lambda} is not positive")));
    }
    Ok((lambda, (0.25 * c * c + lambda).sqrt()))
}

/// Closed-form boundary trace.
pub fn supersol_trace(t: f64, k: f64, c: f64, lambda: f64, gamma: f64, variant: TraceVariant) -> f64 {
    let arg = match variant {
        TraceVariant::GammaSqrtT => gamma * t.sqrt(),
        TraceVariant::GammaSquaredSqrtT => gamma * gamma * t.sqrt(),
    };
    (erfc(0.5 * c * t.sqrt()) + (lambda * t).exp() * erf(arg)) / (k * k)
}

/// Boundary trace by Gauss–Legendre quadrature of the two integrals that
/// define it (initial part and boundary-layer part).
pub fn supersol_trace_quadrature(t: f64, k: f64, c: f64, lambda: f64, gamma: f64) -> f64 {
    if t == 0.0 {
        return 1.0 / (k * k);
    }
    let gl = GaussLegendre::new(16);
    let st = t.sqrt();
    // x = 2√t z over the even extension of e^{−c|x|/2}
    let initial =
        (-0.25 * c * c * t).exp() * 2.0 / PI.sqrt() * gl.composite(0.0, 7.0, 28, |z| (-z * z - c * st * z).exp());
    // σ = √(t − s)
    let layer = 2.0 * gamma / PI.sqrt()
        * gl.composite(0.0, st, 32, |s| (-0.25 * c * c * s * s + lambda * (t - s * s)).exp());
    (initial + layer) / (k * k)
}

fn first_crossing(f: impl Fn(f64) -> f64, level: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1e-3;
    while f(hi) < level {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::solver("trace never reaches the level"));
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(m) < level {
            lo = m;
        } else {
            hi = m;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn sampled_delta(params: &Params, gprime0: f64, eps: f64) -> f64 {
    let slope = gprime0 - eps;
    let h = 1e-5;
    let mut y = h;
    while y < 1.0 {
        if params.flux.value(y) < slope * y {
            return y - h;
        }
        y += h;
    }
    1.0
}

/// Linear super-solution on `grid` by finite differences, snapshots at the
/// full-step times of `cfg`.
pub fn evolve_supersolution(
    params: &Params,
    k: f64,
    lambda: f64,
    gamma: f64,
    grid: Arc<Grid1D>,
    cfg: &EvolveConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let disc = Discretization::new(grid.clone(), params.c, cfg.far_bc);
    let (n, dt) = cfg.steps();
    let slope = |t: f64| -gamma / (k * k) * (lambda * t).exp();
    let mut u = vec![1.0 / (k * k); grid.len()];
    let mut snapshots = vec![(0.0, Field::new(grid.clone(), u.clone())?)];
    let mut trace = vec![TracePoint { t: 0.0, u: u[0], ux: slope(0.0) }];
    for j in 1..=n {
        let (t0, t1) = ((j - 1) as f64 * dt, if j == n { cfg.t_end } else { j as f64 * dt });
        disc.step_prescribed(t1 - t0, &mut u, slope(t0), slope(t1));
        trace.push(TracePoint { t: t1, u: u[0], ux: slope(t1) });
        if j == n || (cfg.snapshot_every > 0 && j % cfg.snapshot_every == 0) {
            snapshots.push((t1, Field::new(grid.clone(), u.clone())?));
        }
    }
    Ok(Trajectory { params: params.clone(), snapshots, boundary_trace: trace, bc_residual: 0.0, rejections: 0 })
}

/// First time the finite-difference super-solution reaches 1/k at x = 0.
pub fn pde_crossing_time(c: f64, k: f64, lambda: f64, gamma: f64, dt: f64) -> Result<f64> {
    let grid = Arc::new(Grid1D::new(40.0, 400, Stretching::TanhClustered { beta: 2.5 })?);
    let disc = Discretization::new(grid.clone(), c, crate::evolve::FarBoundary::Outflow);
    let slope = |t: f64| -gamma / (k * k) * (lambda * t).exp();
    let mut u = vec![1.0 / (k * k); grid.len()];
    let level = 1.0 / k;
    let mut t = 0.0;
    while t < 1e4 {
        let before = u[0];
        disc.step_prescribed(dt, &mut u, slope(t), slope(t + dt));
        if u[0] >= level {
            return Ok(t + dt * (level - before) / (u[0] - before));
        }
        t += dt;
    }
    Err(Error::solver("finite-difference super-solution never reached 1/k"))
}

/// Crossing times T_k for each k with the bound (1/λ) log(k − 1).
pub fn supersol_ladder(params: &Params, gprime0: f64, ks: &[f64], eps: Option<f64>) -> Result<SupersolLadder> {
    params.validate()?;
    let c = params.c;
    if params.flux.value(0.0).abs() > 1e-9 {
        return Err(Error::input("the ladder is built next to a zero of g at u = 0"));
    }
    let eps = eps.unwrap_or_else(|| default_epsilon(gprime0));
    let (lambda, gamma) = ladder_rates(c, gprime0, eps)?;
    let delta = sampled_delta(params, gprime0, eps);
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        if !(k * delta > 1.0) {
            return Err(Error::input(format!("k = {k} must exceed 1/δ = {:.4}", 1.0 / delta)));
        }
        let level = 1.0 / k;
        let t_k = first_crossing(|t| supersol_trace(t, k, c, lambda, gamma, TraceVariant::GammaSqrtT), level)?;
        let t_k_quadrature = first_crossing(|t| supersol_trace_quadrature(t, k, c, lambda, gamma), level)?;
        let t_k_squared_variant =
            first_crossing(|t| supersol_trace(t, k, c, lambda, gamma, TraceVariant::GammaSquaredSqrtT), level)?;
        let t_k_pde = pde_crossing_time(c, k, lambda, gamma, 2e-3).ok();
        let bound = (k - 1.0).ln() / lambda;
        rows.push(LadderRow { k, t_k, t_k_quadrature, t_k_squared_variant, t_k_pde, bound, holds: t_k > bound });
    }
    let log_slope = if rows.len() >= 2 {
        let m = rows.len() as f64;
        let mx = rows.iter().map(|r| r.k.ln()).sum::<f64>() / m;
        let my = rows.iter().map(|r| r.t_k).sum::<f64>() / m;
        let num: f64 = rows.iter().map(|r| (r.k.ln() - mx) * (r.t_k - my)).sum();
        let den: f64 = rows.iter().map(|r| (r.k.ln() - mx).powi(2)).sum();
        num / den
    } else {
        f64::NAN
    };
    Ok(SupersolLadder {
        c,
        gprime0,
        epsilon: eps,
        delta,
        lambda,
        gamma,
        rows,
        log_slope,
        log_slope_expected: 1.0 / lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::FluxModel;

    fn flux() -> Params {
        Params::new(1.0, FluxModel::shifted(FluxModel::cosine(1.0), -2.0)).unwrap()
    }

    #[test]
    fn rates_for_flat_zero() {
        let (l, g) = ladder_rates(1.0, 0.0, 0.05).unwrap();
        assert!((l - 0.96).abs() < 1e-12 && (g - 1.1).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let (l, g) = ladder_rates(1.0, 0.0, 0.05).unwrap();
        for &t in &[1e-3, 0.1, 1.0, 3.0, 7.5] {
            let a = supersol_trace(t, 10.0, 1.0, l, g, TraceVariant::GammaSqrtT);
            let b = supersol_trace_quadrature(t, 10.0, 1.0, l, g);
            assert!((a - b).abs() < 1e-12 * a.max(1.0) + 1e-14, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn ladder_bound_and_monotonicity() {
        let lad = supersol_ladder(&flux(), 0.0, &[10.0, 100.0, 1000.0], None).unwrap();
        assert!(lad.rows.iter().all(|r| r.holds));
        assert!(lad.rows.windows(2).all(|w| w[1].t_k > w[0].t_k));
        assert!(((lad.log_slope - lad.log_slope_expected) / lad.log_slope_expected).abs() < 0.3);
    }

    #[test]
    fn small_k_is_rejected() {
        assert!(supersol_ladder(&flux(), 0.0, &[5.0], None).is_err());
    }
}
