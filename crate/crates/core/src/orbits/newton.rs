use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::linalg::{gmres, norm_inf};

use super::{FlowMap, OrbitRecord};

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub gmres_rtol: f64,
    pub krylov_max: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 15, gmres_rtol: 1e-9, krylov_max: 200 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonReport {
    pub converged: bool,
    pub residuals: Vec<f64>,
    pub krylov_iterations: Vec<usize>,
}

fn residual_of(end: &[f64], u: &[f64], phase: f64, y: f64) -> (Vec<f64>, f64) {
    let mut r: Vec<f64> = end.iter().zip(u).map(|(a, b)| a - b + TAU).collect();
    r.push(phase - y);
    let norm = norm_inf(&r);
    (r, norm)
}

/// Newton–Krylov on (u0, T) for Φ_T(u0) − u0 + 2π = 0 with u0(0) = y_phase.
pub fn refine_orbit_newton(seed: &OrbitRecord, cfg: &NewtonConfig) -> Result<(OrbitRecord, NewtonReport)> {
    let mut fm: FlowMap = seed.flow_map();
    let y = seed.y_phase;
    let n = seed.profile0.values().len();
    let mut u = seed.profile0.values().to_vec();
    let mut period = seed.period;
    let mut report = NewtonReport { converged: false, residuals: Vec::new(), krylov_iterations: Vec::new() };

    let mut base = fm.path(&u, period)?;
    let (mut r, mut res) = residual_of(base.end(), &u, u[0], y);
    for _ in 0..=cfg.max_iter {
        report.residuals.push(res);
        if res <= cfg.tol {
            report.converged = true;
            break;
        }
        if report.residuals.len() > cfg.max_iter {
            break;
        }
        // derivative of the end state with respect to the period
        let delta = 1e-7 * period;
        let shifted = fm.advance(&u, period + delta)?;
        let d_period: Vec<f64> = shifted.iter().zip(base.end()).map(|(a, b)| (a - b) / delta).collect();

        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut failure = None;
        let (dx, info) = gmres(
            |x: &[f64]| {
                let v = &x[..n];
                let tau = x[n];
                let jv = match fm.tangent(&base, v) {
                    Ok(jv) => jv,
                    Err(e) => {
                        failure = Some(e);
                        return vec![0.0; n + 1];
                    }
                };
                let mut out: Vec<f64> = (0..n).map(|i| jv[i] - v[i] + tau * d_period[i]).collect();
                out.push(v[0]);
                out
            },
            &rhs,
            cfg.gmres_rtol,
            cfg.krylov_max,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        report.krylov_iterations.push(info.iterations);

        // damped update
        let mut step = 1.0;
        loop {
            let trial_u: Vec<f64> = u.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            let trial_t = period + step * dx[n];
            let ok = trial_t > 0.0;
            if ok {
                if let Ok(b) = fm.path(&trial_u, trial_t) {
                    let (tr, tres) = residual_of(b.end(), &trial_u, trial_u[0], y);
                    if tres < res || step < 1.0 / 64.0 {
                        u = trial_u;
                        period = trial_t;
                        base = b;
                        r = tr;
                        res = tres;
                        break;
                    }
                }
            }
            step *= 0.5;
            if step < 1.0 / 64.0 {
                return Err(Error::solver(format!(
                    "Newton line search failed; residual {res:.3e} after {} iterations",
                    report.residuals.len()
                )));
            }
        }
    }
    if !report.converged {
        return Err(Error::solver(format!(
            "Newton-Krylov stagnated at residual {:.3e} (tolerance {:.1e})",
            res, cfg.tol
        )));
    }
    let profile = Field::new(seed.profile0.grid().clone(), u)?;
    let mut rec = OrbitRecord::new(seed.params.clone(), period, profile, y, seed.steps_per_period);
    rec.residual = res;
    Ok((rec, report))
}
