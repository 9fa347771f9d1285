use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::evolve::{Discretization, FarBoundary, StepRule, Stepper};
use crate::grid::Field;
use crate::Params;

use super::OrbitRecord;

#[derive(Debug, Clone)]
pub struct AttractConfig {
    pub dt: f64,
    pub t_end: f64,
    pub y_phase: f64,
    /// Stop once successive periods differ by less than this (relative).
    pub period_tol: f64,
    pub min_periods: usize,
}

impl AttractConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, y_phase: 0.0, period_tol: 1e-9, min_periods: 3 }
    }
}

/// Cubic Hermite interpolation on [0, 1] given end values and end slopes
/// (slopes already scaled by the interval length).
fn hermite(a: f64, b: f64, da: f64, db: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * a + (s3 - 2.0 * s2 + s) * da + (-2.0 * s3 + 3.0 * s2) * b + (s3 - s2) * db
}

/// Integrates until the boundary trace crosses y_phase − 2πm for successive
/// m with a converged spacing, which is the period.
pub fn find_orbit_attract(params: &Params, u0: &Field, cfg: &AttractConfig) -> Result<OrbitRecord> {
    params.validate()?;
    if !(cfg.dt > 0.0) || !(cfg.t_end > 0.0) {
        return Err(Error::input("attraction needs dt > 0 and t_end > 0"));
    }
    let grid = u0.grid().clone();
    let disc = Discretization::new(grid.clone(), params.c, FarBoundary::Outflow);
    let mut stepper = Stepper::new(disc, params.flux.clone());
    let n = grid.len();
    let mut u = u0.values().to_vec();
    let mut f_prev = vec![0.0; n];
    let mut f_next = vec![0.0; n];
    let mut t = 0.0;
    // first level strictly below the start value
    let mut m = ((cfg.y_phase - u[0]) / TAU).floor() as i64 + 1;
    let mut crossings: Vec<(f64, i64, Vec<f64>)> = Vec::new();
    let dt = cfg.dt;
    while t < cfg.t_end {
        let before = u.clone();
        stepper.step(StepRule::Theta(0.5), dt, &mut u, None)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::solver(format!("non-finite state at t = {t}")));
        }
        let level = cfg.y_phase - TAU * m as f64;
        if before[0] > level && u[0] <= level {
            stepper.disc().rhs(stepper.flux(), &before, &mut f_prev);
            stepper.disc().rhs(stepper.flux(), &u, &mut f_next);
            let eval = |s: f64| hermite(before[0], u[0], dt * f_prev[0], dt * f_next[0], s) - level;
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if eval(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            let profile: Vec<f64> = (0..n)
                .map(|i| hermite(before[i], u[i], dt * f_prev[i], dt * f_next[i], s) + TAU * m as f64)
                .collect();
            crossings.push((t + s * dt, m, profile));
            m += 1;
            let k = crossings.len();
            if k > cfg.min_periods.max(2) {
                let t1 = crossings[k - 1].0 - crossings[k - 2].0;
                let t0 = crossings[k - 2].0 - crossings[k - 3].0;
                if (t1 - t0).abs() <= cfg.period_tol * t1 {
                    break;
                }
            }
        }
        t += dt;
    }
    let k = crossings.len();
    if k < 2 {
        return Err(Error::NotFound(format!(
            "no periodic orbit: boundary value did not descend by two gauge periods within t = {} \
             (u(0) went from {:.4} to {:.4})",
            cfg.t_end,
            u0.values()[0],
            u[0]
        )));
    }
    let period = crossings[k - 1].0 - crossings[k - 2].0;
    let profile = Field::new(grid, crossings.pop().unwrap().2)?;
    let steps = (period / dt).round().max(1.0) as usize;
    let mut rec = OrbitRecord::new(params.clone(), period, profile, cfg.y_phase, steps);
    rec.residual = rec.periodicity_residual()?;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::OrbitGrid;
    use std::f64::consts::PI;

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |s: f64| 1.0 - 2.0 * s + 0.5 * s * s + 3.0 * s * s * s;
        let dp = |s: f64| -2.0 + s + 9.0 * s * s;
        for s in [0.0, 0.3, 0.77, 1.0] {
            assert!((hermite(p(0.0), p(1.0), dp(0.0), dp(1.0), s) - p(s)).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_flux_period() {
        let params = Params::cosine(2.0, 0.0).unwrap();
        let grid = OrbitGrid { nodes: 200, length: 10.0, beta: 2.0 }.build().unwrap();
        let u0 = Field::from_fn(grid, |x| x + 0.3).unwrap();
        let rec = find_orbit_attract(&params, &u0, &AttractConfig::new(1e-3, 30.0)).unwrap();
        assert!((rec.period - PI).abs() < 1e-8, "{}", rec.period);
    }

    #[test]
    fn zeros_of_flux_block_descent() {
        let params = Params::cosine(1.0, 1.5).unwrap();
        let grid = OrbitGrid { nodes: 100, length: 12.0, beta: 2.0 }.build().unwrap();
        let u0 = Field::from_fn(grid, |x| x).unwrap();
        let err = find_orbit_attract(&params, &u0, &AttractConfig::new(0.01, 60.0)).unwrap_err();
        assert!(matches!(err, Error::NotFound(_)));
    }
}
