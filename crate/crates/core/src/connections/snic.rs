use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::orbits::{orbit_for, OrbitRecord, ScanConfig};
use crate::Params;

use super::hetero::aligned_distance;
use super::{compute_heteroclinic, find_zero_pairs, ConnectionConfig, ConnectionRecord, Window};

#[derive(Debug, Clone)]
pub struct SnicConfig {
    pub orbit: ScanConfig,
    pub homoclinic: ConnectionConfig,
    pub window: Window,
}

impl Default for SnicConfig {
    fn default() -> Self {
        Self {
            orbit: ScanConfig { nodes: 200, steps_per_period: 800, ..Default::default() },
            homoclinic: ConnectionConfig { ramp_n: 200.0, nodes: 300, length: 30.0, tail: 10.0, ..Default::default() },
            window: Window::new(5.0, -5.0, 5.0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SnicRow {
    pub theta: f64,
    pub period: f64,
    /// Window distance to the homoclinic after time alignment.
    pub window_distance: Option<f64>,
    pub shift: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnicReport {
    pub c: f64,
    pub rows: Vec<SnicRow>,
    pub periods_increasing: bool,
    /// T at the last grid point over T at the first.
    pub period_ratio: f64,
    pub distances_decreasing: bool,
    pub homoclinic: ConnectionRecord,
}

impl SnicReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("theta,T\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.12}\n", r.theta, r.period));
        }
        s
    }
}

/// Orbit u(x, t) for t ∈ [−T, T], continued backward by the gauge shift.
struct OrbitSurface {
    period: f64,
    states: Vec<Field>,
}

impl OrbitSurface {
    fn new(orbit: &OrbitRecord) -> Result<Self> {
        let mut fm = orbit.flow_map();
        let path = fm.path(orbit.profile0.values(), orbit.period)?;
        let grid = orbit.profile0.grid().clone();
        let states = path.states.into_iter().map(|v| Field::new(grid.clone(), v)).collect::<Result<_>>()?;
        Ok(Self { period: orbit.period, states })
    }

    fn value(&self, x: f64, t: f64) -> Option<f64> {
        if t.abs() > self.period {
            return None;
        }
        let (tt, lift) = if t < 0.0 { (t + self.period, TAU) } else { (t, 0.0) };
        let m = self.states.len() - 1;
        let pos = tt / self.period * m as f64;
        let i = (pos.floor() as usize).min(m - 1);
        let w = pos - i as f64;
        Some((1.0 - w) * self.states[i].eval(x) + w * self.states[i + 1].eval(x) + lift)
    }
}

/// Periods along θ ↗ 1 and the window distance of each orbit to the
/// homoclinic loop at θ = 1.
pub fn snic_scan(c: f64, thetas: &[f64], cfg: &SnicConfig) -> Result<SnicReport> {
    if !(c > 0.0) {
        return Err(Error::input("the saddle-node scan needs c > 0"));
    }
    let at_one = Params::cosine(c, 1.0)?;
    let pair = *find_zero_pairs(&at_one.flux)?
        .first()
        .ok_or_else(|| Error::solver("no zero of the flux at theta = 1"))?;
    // gauge shift so the loop runs from π down to −π through 0
    let raw = compute_heteroclinic(&pair, &at_one, &cfg.homoclinic)?;
    let homoclinic = raw.gauge_shifted(-(pair.y1 + pair.y2) * 0.5)?;

    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let row = (|| -> Result<SnicRow> {
            let params = Params::cosine(c, theta)?;
            let orbit = orbit_for(&params, &cfg.orbit)?;
            let surf = OrbitSurface::new(&orbit)?;
            let fo = |x: f64, t: f64| surf.value(x, t);
            let fh = |x: f64, t: f64| homoclinic.value_at(x, t);
            let dist = aligned_distance(&fo, &fh, &cfg.window, 1.0).ok();
            Ok(SnicRow {
                theta,
                period: orbit.period,
                window_distance: dist.map(|d| d.1),
                shift: dist.map(|d| d.0),
                error: None,
            })
        })();
        rows.push(row.unwrap_or_else(|e| SnicRow {
            theta,
            period: f64::NAN,
            window_distance: None,
            shift: None,
            error: Some(e.to_string()),
        }));
    }
    let good: Vec<&SnicRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let periods_increasing = good.windows(2).all(|w| w[1].period > w[0].period);
    let period_ratio = match (good.first(), good.last()) {
        (Some(a), Some(b)) => b.period / a.period,
        _ => f64::NAN,
    };
    let dists: Vec<f64> = good.iter().filter_map(|r| r.window_distance).collect();
    let distances_decreasing = dists.len() == good.len() && dists.windows(2).all(|w| w[1] < w[0]);
    Ok(SnicReport { c, rows, periods_increasing, period_ratio, distances_decreasing, homoclinic })
}
