//! Time integration of the half-line problem.

mod diagnostics;
mod stepper;
mod volterra;

pub use diagnostics::{check_comparison, zero_count, zero_count_with_tol, zero_history, ComparisonReport, ZeroCount};
pub use stepper::{schedule, Discretization, FarBoundary, StepInfo, StepRule, Stepper, NEWTON_TOL};
pub use volterra::{evolve_volterra, VolterraConfig};

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Trapezoid rule with an implicit scalar solve at the boundary node.
    ImexTrapezoid,
    /// BDF2 with Newton on the boundary node.
    ImplicitNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_far")]
    pub far_bc: FarBoundary,
    /// Store a snapshot every this many steps (0: only first and last).
    #[serde(default)]
    pub snapshot_every: usize,
    /// Levels of geometric step grading over the first step; 0 disables.
    #[serde(default = "default_startup")]
    pub startup_grading: usize,
}

fn default_scheme() -> Scheme {
    Scheme::ImexTrapezoid
}

fn default_far() -> FarBoundary {
    FarBoundary::Outflow
}

fn default_startup() -> usize {
    8
}

pub const MAX_REJECTIONS: usize = 20;

impl EvolveConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            scheme: Scheme::ImexTrapezoid,
            far_bc: FarBoundary::Outflow,
            snapshot_every: 0,
            startup_grading: 8,
        }
    }

    pub fn with_far(mut self, far: FarBoundary) -> Self {
        self.far_bc = far;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::input(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::input(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if let FarBoundary::NeumannStrain { strain } = self.far_bc {
            if !strain.is_finite() {
                return Err(Error::input("far-field strain must be finite"));
            }
        }
        Ok(())
    }

    /// Number of steps and the step size that lands exactly on t_end.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let n = (self.t_end / self.dt).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    /// u(0, t)
    pub u: f64,
    /// ∂x u(0, t) from a one-sided second-order difference
    pub ux: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: Params,
    pub snapshots: Vec<(f64, Field)>,
    pub boundary_trace: Vec<TracePoint>,
    /// Largest |∂x u(0,t) − g(u(0,t))| over the trace.
    pub bc_residual: f64,
    pub rejections: usize,
}

impl Trajectory {
    pub fn final_field(&self) -> &Field {
        &self.snapshots.last().expect("trajectory has snapshots").1
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    /// u(0, t) by linear interpolation of the boundary trace.
    pub fn boundary_at(&self, t: f64) -> Option<f64> {
        let tr = &self.boundary_trace;
        if tr.is_empty() || t < tr[0].t || t > tr[tr.len() - 1].t {
            return None;
        }
        let i = tr.partition_point(|p| p.t <= t).clamp(1, tr.len() - 1);
        let (a, b) = (tr[i - 1], tr[i]);
        if b.t == a.t {
            return Some(b.u);
        }
        Some(a.u + (b.u - a.u) * (t - a.t) / (b.t - a.t))
    }

    /// Long-format CSV "t,x,u" of all snapshots.
    pub fn snapshots_csv(&self) -> String {
        let mut s = String::from("t,x,u\n");
        for (t, f) in &self.snapshots {
            for (x, u) in f.grid().nodes().iter().zip(f.values()) {
                writeln!(s, "{t:.12e},{x:.12e},{u:.12e}").unwrap();
            }
        }
        s
    }

    /// Boundary-trace CSV "t,u0,ux0".
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("t,u0,ux0\n");
        for p in &self.boundary_trace {
            writeln!(s, "{:.12e},{:.12e},{:.12e}", p.t, p.u, p.ux).unwrap();
        }
        s
    }
}

fn trace_point(t: f64, xs: &[f64], u: &[f64]) -> TracePoint {
    let d = crate::grid::derivative(&xs[..3], &u[..3]);
    TracePoint { t, u: u[0], ux: d[0] }
}

/// Integrates from `u0` with the method of lines.
pub fn evolve(params: &Params, u0: &Field, cfg: &EvolveConfig) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    let grid = u0.grid().clone();
    let disc = Discretization::new(grid.clone(), params.c, cfg.far_bc);
    let mut stepper = Stepper::new(disc, params.flux.clone());
    let xs = grid.nodes().to_vec();
    let (nsteps, dt) = cfg.steps();
    let plan = schedule(cfg.scheme, dt, nsteps, cfg.startup_grading);

    let mut u = u0.values().to_vec();
    stepper.disc().enforce(&mut u);
    // previous state, kept only while the step size is unchanged (BDF2)
    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut t = 0.0;
    let mut snapshots = vec![(0.0, Field::new(grid.clone(), u.clone())?)];
    let mut trace = vec![trace_point(0.0, &xs, &u)];
    let mut bc_residual: f64 = 0.0;
    let mut rejections = 0;
    let mut full_steps = 0usize;

    for (k, &(rule, h)) in plan.iter().enumerate() {
        let before = u.clone();
        let history = prev.as_ref().filter(|(ph, _)| *ph == h).map(|(_, v)| v.as_slice());
        let rule = if rule == StepRule::Bdf2 && history.is_none() { StepRule::Theta(1.0) } else { rule };
        match stepper.step(rule, h, &mut u, history) {
            Ok(info) => {
                bc_residual = bc_residual.max(info.boundary_residual);
            }
            Err(_) => {
                u.copy_from_slice(&before);
                advance_with_halving(&mut stepper, h, &mut u, &mut rejections)?;
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::solver(format!("non-finite state at t = {t}")));
        }
        prev = Some((h, before));
        t += h;
        let at_end = k + 1 == plan.len();
        if at_end {
            t = cfg.t_end;
        }
        trace.push(trace_point(t, &xs, &u));
        // a "full step" ends whenever the accumulated time crosses a dt multiple
        let completed = ((t / dt) + 1e-9).floor() as usize;
        if completed > full_steps || at_end {
            full_steps = completed;
            if at_end || (cfg.snapshot_every > 0 && full_steps.is_multiple_of(cfg.snapshot_every)) {
                snapshots.push((t, Field::new(grid.clone(), u.clone())?));
            }
        }
    }
    let bc_trace = trace
        .iter()
        .map(|p| (p.ux - params.flux.value(p.u)).abs())
        .fold(0.0, f64::max);
    Ok(Trajectory {
        params: params.clone(),
        snapshots,
        boundary_trace: trace,
        bc_residual: bc_trace.max(bc_residual),
        rejections,
    })
}

/// Retries a failed step as 2^j backward-Euler substeps.
fn advance_with_halving(stepper: &mut Stepper, h: f64, u: &mut [f64], rejections: &mut usize) -> Result<()> {
    let start = u.to_vec();
    let mut parts = 2usize;
    loop {
        *rejections += 1;
        if *rejections > MAX_REJECTIONS {
            return Err(Error::solver(format!(
                "more than {MAX_REJECTIONS} step rejections; boundary Newton keeps failing"
            )));
        }
        u.copy_from_slice(&start);
        let sub = h / parts as f64;
        if (0..parts).all(|_| stepper.step(StepRule::Theta(1.0), sub, u, None).is_ok()) {
            return Ok(());
        }
        parts *= 2;
    }
}

/// Convenience: field on `grid` sampled from a closure.
pub fn field_from(grid: &Arc<crate::grid::Grid1D>, f: impl Fn(f64) -> f64) -> Result<Field> {
    Field::from_fn(grid.clone(), f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::FluxModel;
    use crate::grid::Grid1D;
    use std::f64::consts::PI;

    #[test]
    fn trivial_solution_x_minus_t() {
        let params = Params::cosine(1.0, 0.0).unwrap();
        let grid = Arc::new(Grid1D::uniform(12.0, 512).unwrap());
        let u0 = Field::from_fn(grid, |x| x).unwrap();
        let cfg = EvolveConfig::new(1e-3, 2.0).with_far(FarBoundary::NeumannStrain { strain: 1.0 });
        let tr = evolve(&params, &u0, &cfg).unwrap();
        let end = tr.boundary_trace.last().unwrap();
        assert!((end.t - 2.0).abs() < 1e-12);
        assert!((end.u + 2.0).abs() <= 5e-4, "{}", end.u);
    }

    #[test]
    fn zero_flux_keeps_constants() {
        let flux = FluxModel::table(vec![0.0; 16]).unwrap();
        let params = Params::new(1.5, flux).unwrap();
        let grid = Arc::new(Grid1D::uniform(10.0, 64).unwrap());
        let u0 = Field::constant(grid, 3.0).unwrap();
        let tr = evolve(&params, &u0, &EvolveConfig::new(0.05, 5.0)).unwrap();
        assert!(tr.final_field().values().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn pi_is_stationary_at_theta_one() {
        let params = Params::cosine(1.0, 1.0).unwrap();
        let grid = Arc::new(Grid1D::uniform(10.0, 64).unwrap());
        let u0 = Field::constant(grid, PI).unwrap();
        let cfg = EvolveConfig::new(0.05, 5.0).with_scheme(Scheme::ImplicitNewton);
        let tr = evolve(&params, &u0, &cfg).unwrap();
        assert!(tr.final_field().values().iter().all(|v| (v - PI).abs() < 1e-12));
    }

    #[test]
    fn schemes_agree() {
        let params = Params::cosine(1.0, 0.5).unwrap();
        let grid = Arc::new(Grid1D::uniform(12.0, 200).unwrap());
        let u0 = Field::from_fn(grid, |x| x).unwrap();
        let a = evolve(&params, &u0, &EvolveConfig::new(2e-3, 1.0)).unwrap();
        let b = evolve(&params, &u0, &EvolveConfig::new(2e-3, 1.0).with_scheme(Scheme::ImplicitNewton)).unwrap();
        let ua = a.boundary_trace.last().unwrap().u;
        let ub = b.boundary_trace.last().unwrap().u;
        assert!((ua - ub).abs() < 1e-4, "{ua} {ub}");
    }

    #[test]
    fn config_validation() {
        assert!(EvolveConfig::new(-1.0, 1.0).validate().is_err());
        assert!(EvolveConfig::new(0.1, f64::NAN).validate().is_err());
        let cfg: EvolveConfig =
            serde_json::from_str(r#"{"dt":0.01,"t_end":1,"far_bc":{"kind":"neumann-strain","strain":1}}"#).unwrap();
        assert_eq!(cfg.far_bc, FarBoundary::NeumannStrain { strain: 1.0 });
        assert!(serde_json::from_str::<EvolveConfig>(r#"{"dt":0.01,"t_end":1,"bogus":1}"#).is_err());
    }
}
