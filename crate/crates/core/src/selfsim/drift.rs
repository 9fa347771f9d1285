use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolveConfig};
use crate::grid::{Field, Grid1D, Stretching};
use crate::Params;

const FIRST_CHUNK: f64 = 1e-4;
const CHUNK_STEPS: f64 = 400.0;

#[derive(Debug, Clone)]
pub struct DriftConfig {
    pub dt: f64,
    pub nodes: usize,
    /// Truncation length; `None` picks 12√t_end + 20.
    pub length: Option<f64>,
    pub beta: f64,
    /// Absolute slack allowed on the envelope for discretization error.
    pub mesh_tol: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self { dt: 1e-3, nodes: 1200, length: None, beta: 3.0, mesh_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub sup_u0: f64,
    /// (t, u(0, t))
    pub trace: Vec<(f64, f64)>,
    /// a in u(0, t) ≈ −a√t, fitted over the last decade of t.
    pub fitted_coefficient: f64,
    pub envelope_holds: bool,
    /// Largest excursion outside the envelope (negative when inside).
    pub envelope_excess: f64,
    /// Envelope checks start once √t spans two cells at the boundary.
    pub checked_from: f64,
}

impl DriftReport {
    /// Envelope −2γ2√(t/π) − ‖u0‖ ≤ u(0, t) ≤ −2γ1√(t/π) + ‖u0‖.
    pub fn envelope(&self, t: f64) -> (f64, f64) {
        let s = 2.0 * (t / PI).sqrt();
        (-self.gamma2 * s - self.sup_u0, -self.gamma1 * s + self.sup_u0)
    }

    pub fn boundary_at(&self, t: f64) -> Option<f64> {
        let tr = &self.trace;
        let i = tr.partition_point(|p| p.0 < t);
        if i >= tr.len() {
            return None;
        }
        if i == 0 || tr[i].0 == t {
            return Some(tr[i].1);
        }
        let (a, b) = (tr[i - 1], tr[i]);
        Some(a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0))
    }
}

/// Evolves with c = 0 and compares u(0, t) with the explicit comparison
/// solutions for the constant fluxes γ1 = min g and γ2 = max g.
pub fn drift_experiment(params: &Params, u0: &Field, t_end: f64, cfg: &DriftConfig) -> Result<DriftReport> {
    if params.c != 0.0 {
        return Err(Error::input("drift experiments need c = 0"));
    }
    let (gamma1, gamma2) = params.flux.range();
    if !(gamma1 > 0.0) {
        return Err(Error::Domain(format!("drift needs inf g > 0, got {gamma1}")));
    }
    let length = cfg.length.unwrap_or(12.0 * t_end.sqrt() + 20.0);
    let grid = Arc::new(Grid1D::new(length, cfg.nodes, Stretching::TanhClustered { beta: cfg.beta })?);
    let checked_from = 4.0 * grid.spacing(0).powi(2);
    let mut state = Field::from_fn(grid, |x| u0.eval(x))?;
    let sup_u0 = state.max_abs();
    // u(0, t) behaves like √t near t = 0 when u0′(0) ≠ g(u0(0)); decade-long
    // chunks with steps scaled to the chunk keep the start-up error relative
    let mut trace = vec![(0.0, state.at_origin())];
    let mut t0 = 0.0;
    let mut t1 = t_end.min(FIRST_CHUNK);
    while t0 < t_end {
        let span = t1 - t0;
        let dt = cfg.dt.min(span / CHUNK_STEPS);
        let tr = evolve(params, &state, &EvolveConfig::new(dt, span))?;
        trace.extend(tr.boundary_trace.iter().skip(1).map(|p| (t0 + p.t, p.u)));
        state = tr.final_field().clone();
        t0 = t1;
        t1 = (10.0 * t1).min(t_end);
    }

    let mut report =
        DriftReport { gamma1, gamma2, sup_u0, trace, fitted_coefficient: f64::NAN, envelope_holds: true, envelope_excess: f64::NEG_INFINITY, checked_from };
    for &(t, u) in report.trace.iter().filter(|p| p.0 >= report.checked_from) {
        let (lo, hi) = report.envelope(t);
        let excess = (lo - u).max(u - hi);
        report.envelope_excess = report.envelope_excess.max(excess);
    }
    report.envelope_holds = report.envelope_excess <= cfg.mesh_tol;
    if !report.envelope_holds {
        return Err(Error::solver(format!(
            "drift envelope violated by {:.3e} (mesh tolerance {:.1e})",
            report.envelope_excess, cfg.mesh_tol
        )));
    }
    // u(0, t) ≈ b − a√t over the last decade
    let pts: Vec<(f64, f64)> = report.trace.iter().filter(|p| p.0 >= 0.1 * t_end && p.0 > 0.0).map(|&(t, u)| (t.sqrt(), u)).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (num, den) =
        pts.iter().fold((0.0, 0.0), |(n, d), p| (n + (p.0 - sx / m) * (p.1 - sy / m), d + (p.0 - sx / m).powi(2)));
    report.fitted_coefficient = -num / den;
    Ok(report)
}
