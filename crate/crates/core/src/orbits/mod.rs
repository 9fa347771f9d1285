//! Relative periodic orbits u(·, t+T) = u(·, t) − 2π.

mod attract;
mod branch;
mod floquet;
mod flow;
mod newton;
mod scan;

pub use attract::{find_orbit_attract, AttractConfig};
pub use branch::{continue_branch, BranchConfig, BranchPoint, BranchResult};
pub use floquet::{floquet_leading, FloquetConfig, FloquetReport};
pub use flow::{BasePath, FlowMap};
pub use newton::{refine_orbit_newton, NewtonConfig, NewtonReport};
pub use scan::{fit_power_law, orbit_for, scan_cell, strain_frequency_scan, ScanConfig, ScanRow};

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Field, Grid1D, Stretching};
use crate::modes::mode_rates;
use crate::Params;

/// Spatial discretization used for orbit computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitGrid {
    pub nodes: usize,
    pub length: f64,
    /// tanh clustering strength toward x = 0 (0 for a uniform mesh).
    pub beta: f64,
}

impl OrbitGrid {
    /// Length from the decay scale of the first boundary-driven mode,
    /// 12/Re ν₁, and at least 10.
    pub fn for_params(params: &Params, omega_guess: f64, nodes: usize) -> Self {
        let scale = if params.c > 0.0 || omega_guess > 0.0 {
            let r = mode_rates(1, omega_guess.max(1e-12), params.c).map(|m| m.nu_plus.re).unwrap_or(1.0);
            12.0 / r
        } else {
            10.0
        };
        Self { nodes, length: scale.max(10.0), beta: 2.0 }
    }

    pub fn build(&self) -> Result<Arc<Grid1D>> {
        let st = if self.beta > 0.0 { Stretching::TanhClustered { beta: self.beta } } else { Stretching::Uniform };
        Ok(Arc::new(Grid1D::new(self.length, self.nodes, st)?))
    }
}

/// Sampled checks along one period of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitChecks {
    pub min_ux: f64,
    pub max_ux: f64,
    /// ∂t u < 0 at every node and step.
    pub decreasing_in_time: bool,
    /// ∂x u > 0 at every node and step.
    pub increasing_in_space: bool,
    /// Each boundary level is attained exactly once per period.
    pub trace_strictly_monotone: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord {
    pub params: Params,
    pub period: f64,
    pub omega: f64,
    /// ω/c for c > 0.
    pub strain: Option<f64>,
    pub y_phase: f64,
    #[serde(skip)]
    pub profile0: Field,
    pub residual: f64,
    pub steps_per_period: usize,
    pub floquet: Vec<Complex64>,
    pub checks: Option<OrbitChecks>,
}

impl OrbitRecord {
    pub fn new(params: Params, period: f64, profile0: Field, y_phase: f64, steps_per_period: usize) -> Self {
        let omega = TAU / period;
        let strain = (params.c > 0.0).then(|| omega / params.c);
        Self {
            params,
            period,
            omega,
            strain,
            y_phase,
            profile0,
            residual: f64::NAN,
            steps_per_period,
            floquet: Vec::new(),
            checks: None,
        }
    }

    /// Exact orbit u = x − ct + y for the constant flux g ≡ 1.
    pub fn trivial(c: f64, grid: Arc<Grid1D>, y_phase: f64, steps_per_period: usize) -> Result<Self> {
        let params = Params::cosine(c, 0.0)?;
        let profile = Field::from_fn(grid, |x| x + y_phase)?;
        let mut rec = Self::new(params, TAU / c, profile, y_phase, steps_per_period);
        rec.residual = 0.0;
        Ok(rec)
    }

    pub fn flow_map(&self) -> FlowMap {
        FlowMap::new(self.profile0.grid().clone(), self.params.c, self.params.flux.clone(), self.steps_per_period)
    }

    /// ‖u(T) − u(0) + 2π‖∞ under the record's flow map.
    pub fn periodicity_residual(&self) -> Result<f64> {
        let mut fm = self.flow_map();
        let end = fm.advance(self.profile0.values(), self.period)?;
        Ok(end.iter().zip(self.profile0.values()).map(|(a, b)| (a - b + TAU).abs()).fold(0.0, f64::max))
    }

    /// Samples monotonicity and gradient range over one period.
    pub fn compute_checks(&mut self) -> Result<OrbitChecks> {
        let mut fm = self.flow_map();
        let path = fm.path(self.profile0.values(), self.period)?;
        let xs = self.profile0.grid().nodes();
        let mut checks = OrbitChecks {
            min_ux: f64::INFINITY,
            max_ux: f64::NEG_INFINITY,
            decreasing_in_time: true,
            increasing_in_space: true,
            trace_strictly_monotone: true,
        };
        for (j, s) in path.states.iter().enumerate() {
            let d = crate::grid::derivative(xs, s);
            for &v in &d {
                checks.min_ux = checks.min_ux.min(v);
                checks.max_ux = checks.max_ux.max(v);
            }
            if d.iter().any(|&v| v <= 0.0) {
                checks.increasing_in_space = false;
            }
            if j > 0 {
                let prev = &path.states[j - 1];
                if s.iter().zip(prev).any(|(a, b)| a >= b) {
                    checks.decreasing_in_time = false;
                }
                if s[0] >= prev[0] {
                    checks.trace_strictly_monotone = false;
                }
            }
        }
        self.checks = Some(checks);
        Ok(checks)
    }

    /// Lower and upper bounds on ∂x u for the cosine family: 1 ∓ |ϑ|.
    pub fn gradient_bounds(&self) -> Option<(f64, f64)> {
        self.params.flux.theta().map(|t| (1.0 - t.abs(), 1.0 + t.abs()))
    }

    /// Period bracket 2π/(c(1+|ϑ|)) ≤ T ≤ 2π/(c(1−|ϑ|)) implied by the
    /// gradient bounds through ω = c·k.
    pub fn period_bracket(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.gradient_bounds()?;
        let c = self.params.c;
        (c > 0.0 && lo > 0.0).then(|| (TAU / (c * hi), TAU / (c * lo)))
    }

    /// Bracket [2π/μ, 2π/λ] with λ = (c/2)(1−ϑ), μ = (c/2)(1+ϑ).
    pub fn half_rate_bracket(&self) -> Option<(f64, f64)> {
        let theta = self.params.flux.theta()?;
        let c = self.params.c;
        let lambda = 0.5 * c * (1.0 - theta);
        let mu = 0.5 * c * (1.0 + theta);
        (lambda > 0.0).then(|| (TAU / mu, TAU / lambda))
    }

    /// Least-squares slope of profile0 over the outer half of the mesh.
    pub fn fitted_far_strain(&self) -> f64 {
        let xs = self.profile0.grid().nodes();
        let us = self.profile0.values();
        let start = xs.partition_point(|&x| x < 0.5 * xs[xs.len() - 1]);
        let (xs, us) = (&xs[start..], &us[start..]);
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let mu = us.iter().sum::<f64>() / m;
        let sxy: f64 = xs.iter().zip(us).map(|(x, u)| (x - mx) * (u - mu)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }

    /// One-line CSV row "theta,c,T,omega,strain,res,mult1_re,mult1_im,mult2_abs".
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let theta = self.params.flux.theta().unwrap_or(f64::NAN);
        let m1 = self.floquet.first().copied().unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        let m2 = self.floquet.get(1).map(|z| z.norm()).unwrap_or(f64::NAN);
        write!(
            s,
            "{theta},{},{:.12},{:.12},{:.12},{:.3e},{:.12},{:.12},{:.12}",
            self.params.c,
            self.period,
            self.omega,
            self.strain.unwrap_or(f64::NAN),
            self.residual,
            m1.re,
            m1.im,
            m2
        )
        .unwrap();
        s
    }
}

pub const BRANCH_CSV_HEADER: &str = "theta,c,T,omega,strain,res,mult1_re,mult1_im,mult2_abs";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_orbit_is_exact() {
        let grid = OrbitGrid { nodes: 120, length: 12.0, beta: 2.0 }.build().unwrap();
        let mut rec = OrbitRecord::trivial(2.0, grid, 0.0, 400).unwrap();
        assert!(rec.periodicity_residual().unwrap() < 1e-11);
        let ch = rec.compute_checks().unwrap();
        assert!((ch.min_ux - 1.0).abs() < 1e-9 && (ch.max_ux - 1.0).abs() < 1e-9);
        assert!(ch.decreasing_in_time && ch.increasing_in_space);
        assert!((rec.fitted_far_strain() - 1.0).abs() < 1e-12);
    }
}
