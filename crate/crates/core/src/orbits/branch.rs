use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::Field;
use crate::Params;

use super::{refine_orbit_newton, NewtonConfig, OrbitGrid, OrbitRecord};

#[derive(Debug, Clone)]
pub struct BranchConfig {
    pub grid: OrbitGrid,
    /// Steps per period at ϑ = 0; kept proportional to T along the branch.
    pub steps_per_period: usize,
    pub newton: NewtonConfig,
    pub min_step: f64,
    /// Branch ends once T exceeds this.
    pub t_max: f64,
}

impl BranchConfig {
    pub fn new(c: f64, grid: OrbitGrid) -> Self {
        Self { grid, steps_per_period: 1000, newton: NewtonConfig::default(), min_step: 1e-3, t_max: 1e4 / c }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub theta: f64,
    pub orbit: OrbitRecord,
    pub continuation_step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchResult {
    pub points: Vec<BranchPoint>,
    /// Why continuation stopped early, if it did.
    pub end: Option<String>,
}

/// Natural-parameter continuation in ϑ from the exact orbit at ϑ = 0, with a
/// secant predictor and a Newton–Krylov corrector.
pub fn continue_branch(c: f64, thetas: &[f64], cfg: &BranchConfig) -> Result<BranchResult> {
    if !(c > 0.0) {
        return Err(Error::input("continuation needs c > 0"));
    }
    match thetas.first() {
        Some(&0.0) => {}
        _ => return Err(Error::input("theta grid must start at 0")),
    }
    if thetas.iter().any(|t| !(t.abs() < 1.0)) {
        return Err(Error::input("theta values must lie in (-1, 1)"));
    }
    let grid = cfg.grid.build()?;
    let start = OrbitRecord::trivial(c, grid.clone(), 0.0, cfg.steps_per_period)?;
    let dt = start.period / cfg.steps_per_period as f64;
    let mut points = vec![BranchPoint { theta: 0.0, orbit: start, continuation_step: 0.0 }];
    let mut end = None;

    'targets: for &target in &thetas[1..] {
        let mut goal = target;
        loop {
            let last = points.last().unwrap();
            let step = goal - last.theta;
            if step.abs() < cfg.min_step {
                end = Some(format!("continuation step fell below {} near theta = {}", cfg.min_step, last.theta));
                break 'targets;
            }
            let seed = predict(&points, goal, dt)?;
            match refine_orbit_newton(&seed, &cfg.newton) {
                Ok((mut orbit, _)) => {
                    orbit.compute_checks()?;
                    let reached = goal == target;
                    points.push(BranchPoint { theta: goal, orbit, continuation_step: step });
                    if points.last().unwrap().orbit.period > cfg.t_max {
                        end = Some(format!("period exceeded {} at theta = {goal}", cfg.t_max));
                        break 'targets;
                    }
                    if reached {
                        break;
                    }
                    goal = target;
                }
                Err(_) => {
                    goal = points.last().unwrap().theta + 0.5 * step;
                }
            }
        }
    }
    Ok(BranchResult { points, end })
}

/// Secant extrapolation of (profile, T) to `theta`.
fn predict(points: &[BranchPoint], theta: f64, dt: f64) -> Result<OrbitRecord> {
    let last = &points[points.len() - 1];
    let (profile, period) = if points.len() >= 2 {
        let prev = &points[points.len() - 2];
        let s = (theta - last.theta) / (last.theta - prev.theta);
        let vals: Vec<f64> = last
            .orbit
            .profile0
            .values()
            .iter()
            .zip(prev.orbit.profile0.values())
            .map(|(a, b)| a + s * (a - b))
            .collect();
        let period = last.orbit.period + s * (last.orbit.period - prev.orbit.period);
        (vals, period.max(0.5 * last.orbit.period))
    } else {
        (last.orbit.profile0.values().to_vec(), last.orbit.period)
    };
    let params = Params::new(last.orbit.params.c, FluxModel::cosine(theta))?;
    let steps = ((period / dt).ceil() as usize).max(last.orbit.steps_per_period.min(200));
    let field = Field::new(last.orbit.profile0.grid().clone(), profile)?;
    Ok(OrbitRecord::new(params, period, field, last.orbit.y_phase, steps))
}
