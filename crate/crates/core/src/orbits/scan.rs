use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::Field;
use crate::Params;

use super::{find_orbit_attract, refine_orbit_newton, AttractConfig, NewtonConfig, OrbitGrid, OrbitRecord};

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub nodes: usize,
    pub steps_per_period: usize,
    /// Transient length in estimated periods before Newton refinement.
    pub attract_periods: f64,
    /// tanh clustering toward x = 0; large speeds need more.
    pub beta: f64,
    pub newton: NewtonConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { nodes: 400, steps_per_period: 2000, attract_periods: 40.0, beta: 2.0, newton: NewtonConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub c: f64,
    pub period: f64,
    pub omega: f64,
    /// ω/c
    pub strain: f64,
    /// Slope fitted to the outer half of the phase-zero profile.
    pub fitted_strain: f64,
    pub residual: f64,
    pub error: Option<String>,
}

impl ScanRow {
    fn failed(c: f64, e: &Error) -> Self {
        Self {
            c,
            period: f64::NAN,
            omega: f64::NAN,
            strain: f64::NAN,
            fitted_strain: f64::NAN,
            residual: f64::NAN,
            error: Some(e.to_string()),
        }
    }
}

/// Rough strain guess for seeding: the harmonic mean of g for the cosine
/// family, otherwise 1.
fn strain_guess(flux: &FluxModel) -> f64 {
    match flux.theta() {
        Some(t) if t.abs() < 1.0 => (1.0 - t * t).sqrt(),
        _ => 1.0,
    }
}

/// Attraction from an affine profile followed by Newton refinement.
pub fn orbit_for(params: &Params, cfg: &ScanConfig) -> Result<OrbitRecord> {
    if !(params.c > 0.0) {
        return Err(Error::input("orbit computation needs c > 0"));
    }
    let k = strain_guess(&params.flux);
    let omega = params.c * k;
    let period_guess = std::f64::consts::TAU / omega;
    let grid = OrbitGrid { beta: cfg.beta, ..OrbitGrid::for_params(params, omega, cfg.nodes) }.build()?;
    let u0 = Field::from_fn(grid, |x| k * x + 0.5)?;
    let dt = period_guess / cfg.steps_per_period as f64;
    let attract = AttractConfig {
        dt,
        t_end: cfg.attract_periods * period_guess * 4.0,
        y_phase: 0.0,
        period_tol: 1e-7,
        min_periods: 3,
    };
    let mut seed = find_orbit_attract(params, &u0, &attract)?;
    seed.steps_per_period = cfg.steps_per_period;
    let (orbit, _) = refine_orbit_newton(&seed, &cfg.newton)?;
    Ok(orbit)
}

pub fn scan_cell(theta: f64, c: f64, cfg: &ScanConfig) -> ScanRow {
    let run = || -> Result<ScanRow> {
        let params = Params::cosine(c, theta)?;
        let orbit = orbit_for(&params, cfg)?;
        Ok(ScanRow {
            c,
            period: orbit.period,
            omega: orbit.omega,
            strain: orbit.omega / c,
            fitted_strain: orbit.fitted_far_strain(),
            residual: orbit.residual,
            error: None,
        })
    };
    run().unwrap_or_else(|e| ScanRow::failed(c, &e))
}

/// Period, frequency and strain over a list of speeds; failed cells are
/// recorded and the scan continues.
pub fn strain_frequency_scan(theta: f64, c_grid: &[f64], cfg: &ScanConfig) -> Vec<ScanRow> {
    c_grid.iter().map(|&c| scan_cell(theta, c, cfg)).collect()
}

/// Least-squares fit y ≈ A·x^p on log scales; returns (A, p).
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::input("power-law fit needs at least two positive points"));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let p = sxy / sxx;
    Ok(((my - p * mx).exp(), p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_fit_recovers_exponent() {
        let xs = [1e-3, 1e-2, 1e-1];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2.0 * x.powf(0.5)).collect();
        let (a, p) = fit_power_law(&xs, &ys).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (p - 0.5).abs() < 1e-12);
    }
}
