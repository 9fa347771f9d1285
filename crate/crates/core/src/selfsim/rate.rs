use serde::Serialize;

use crate::connections::{compute_heteroclinic, ConnectionConfig, SignBetween, ZeroPair};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::Params;

#[derive(Debug, Clone)]
pub struct RateFitConfig {
    pub connection: ConnectionConfig,
    /// Fit window for the distance from zero, as (multiple of the initial
    /// distance, absolute upper bound).
    pub window: (f64, f64),
    pub table_size: usize,
}

impl Default for RateFitConfig {
    fn default() -> Self {
        Self {
            connection: ConnectionConfig { ramp_n: 1e4, nodes: 600, length: 40.0, beta: 3.0, tail: 1.0, ..Default::default() },
            window: (20.0, 0.05),
            table_size: 1024,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub gamma: f64,
    /// γ², the rate of the linearization at the zero.
    pub predicted_rate: f64,
    pub fitted_rate: f64,
    /// Slope of log u(·, t) near the boundary when u(0, t) leaves the fit window.
    pub profile_log_slope: f64,
    pub points: usize,
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), p| (n + (p.0 - mx) * (p.1 - my), d + (p.0 - mx).powi(2)));
    num / den
}

/// With c = 0 and the tabulated flux −γ sin u the zero u = 0 is repelling
/// with eigenfunction e^{−γx} and rate γ². Evolves a small ramp away from it
/// and fits both the growth rate and the spatial decay.
pub fn rate_fit_linear_zero(gamma: f64, cfg: &RateFitConfig) -> Result<RateFit> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::input(format!("gamma must be positive, got {gamma}")));
    }
    let flux = FluxModel::tabulate(cfg.table_size, |u| -gamma * u.sin())?;
    let params = Params::new(0.0, flux)?;
    let pair = ZeroPair {
        y1: 0.0,
        y2: std::f64::consts::PI,
        sign_between: SignBetween::Negative,
        gprime_y1: -gamma,
        gprime_y2: gamma,
        degenerate: false,
    };
    let rec = compute_heteroclinic(&pair, &params, &cfg.connection)?;
    let trace = &rec.trajectory.boundary_trace;
    let d0 = trace[0].u.abs();
    let (lo, hi) = (cfg.window.0 * d0, cfg.window.1);
    let pts: Vec<(f64, f64)> = trace.iter().filter(|p| p.u >= lo && p.u <= hi).map(|p| (p.t, p.u.ln())).collect();
    if pts.len() < 4 {
        return Err(Error::NotFound("too few samples in the fit window".into()));
    }
    let fitted_rate = least_squares_slope(&pts);

    let snap = rec
        .trajectory
        .snapshots
        .iter()
        .find(|(_, f)| f.at_origin() >= hi)
        .or(rec.trajectory.snapshots.last())
        .ok_or_else(|| Error::solver("no snapshots"))?;
    let field = &snap.1;
    let prof: Vec<(f64, f64)> = field
        .grid()
        .nodes()
        .iter()
        .zip(field.values())
        .filter(|(&x, &u)| x <= 1.0 / gamma && u > 0.0)
        .map(|(&x, &u)| (x, u.ln()))
        .collect();
    Ok(RateFit {
        gamma,
        predicted_rate: gamma * gamma,
        fitted_rate,
        profile_log_slope: least_squares_slope(&prof),
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_gamma_rate() {
        let r = rate_fit_linear_zero(1.0, &RateFitConfig::default()).unwrap();
        assert!(r.fitted_rate > 0.9 && r.fitted_rate < 1.1, "{r:?}");
        assert!((r.profile_log_slope + 1.0).abs() < 0.05, "{r:?}");
    }

    #[test]
    fn half_gamma_rate() {
        let r = rate_fit_linear_zero(0.5, &RateFitConfig::default()).unwrap();
        assert!((r.fitted_rate / 0.25 - 1.0).abs() < 0.1, "{r:?}");
        assert!((r.profile_log_slope + 0.5).abs() < 0.025, "{r:?}");
    }
}
