use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{schedule, Discretization, FarBoundary, Scheme, StepRule, Stepper, TracePoint, Trajectory};
use crate::grid::{Field, Grid1D, Stretching};
use crate::Params;

use super::ZeroPair;

const CONFINE_TOL: f64 = 1e-10;
const MONOTONE_TOL: f64 = 1e-10;
const DAMPING_TIME: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectionConfig {
    /// Ramp index n: the ramp starts 1/n away from the departing zero.
    pub ramp_n: f64,
    pub nodes: usize,
    pub length: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Time integrated after the boundary value has arrived.
    pub tail: f64,
    /// Integration stops this long after the midpoint crossing even if the
    /// boundary value has not arrived.
    pub after_half: f64,
    /// Minimum spacing of stored snapshots.
    pub store_dt: f64,
    /// Right end of the x-window used for local convergence.
    pub window_x: f64,
    /// Boundary speed below which the step is doubled (up to 64 dt).
    pub slow_speed: f64,
}

impl Default for ConnectionConfig {
    fn default() -> Self {
        Self {
            ramp_n: 10.0,
            nodes: 400,
            length: 40.0,
            beta: 2.0,
            dt: 5e-3,
            t_max: 5e3,
            tail: 20.0,
            after_half: 500.0,
            store_dt: 0.02,
            window_x: 5.0,
            slow_speed: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardSample {
    pub t: f64,
    /// sup over [0, window_x] of |u − forward limit|
    pub window_sup: f64,
    /// sup over the whole truncated domain
    pub domain_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionRates {
    /// Exponential rate fitted to the departure of u(0, t) from the
    /// backward limit.
    pub backward_fitted: Option<f64>,
    /// Rate g′(y)² − g′(y)c of the point eigenvalue at the backward limit,
    /// when that eigenvalue exists.
    pub backward_predicted: Option<f64>,
    /// sup over the whole domain of |u − backward limit| at the first
    /// stored time.
    pub backward_domain_sup: f64,
    pub forward: Vec<ForwardSample>,
}

/// Connection computed from a ramp; times are recentered so that u(0, 0)
/// is the midpoint of the pair.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionRecord {
    pub pair: ZeroPair,
    pub params: Params,
    pub ramp_n: f64,
    pub backward_limit: f64,
    pub forward_limit: f64,
    /// Time, before recentering, at which u(0, ·) crossed the midpoint.
    pub t_half: f64,
    /// u(0, ·) came within 1e−3·(y2 − y1) of the forward limit.
    pub arrived: bool,
    pub rates: ConnectionRates,
    /// min over stored samples of the distance to the nearer zero.
    pub confinement_margin: f64,
    pub confined: bool,
    pub monotone_in_time: bool,
    /// Largest step against the direction of travel between snapshots.
    pub monotonicity_defect: f64,
    pub window_x: f64,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Space-time window [0, x_max] × [t_min, t_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Window {
    pub fn new(x_max: f64, t_min: f64, t_max: f64) -> Self {
        Self { x_max, t_min, t_max }
    }

    fn samples(&self) -> (Vec<f64>, Vec<f64>) {
        let nx = 26;
        let nt = ((self.t_max - self.t_min) / 0.05).ceil().max(1.0) as usize;
        let xs = (0..nx).map(|i| self.x_max * i as f64 / (nx - 1) as f64).collect();
        let ts = (0..=nt).map(|j| self.t_min + (self.t_max - self.t_min) * j as f64 / nt as f64).collect();
        (xs, ts)
    }
}

impl ConnectionRecord {
    pub fn time_range(&self) -> (f64, f64) {
        let s = &self.trajectory.snapshots;
        (s[0].0, s[s.len() - 1].0)
    }

    /// u(x, t) with linear interpolation between stored snapshots.
    pub fn value_at(&self, x: f64, t: f64) -> Option<f64> {
        let s = &self.trajectory.snapshots;
        let (t0, t1) = self.time_range();
        if t < t0 || t > t1 {
            return None;
        }
        let i = s.partition_point(|(ts, _)| *ts <= t).clamp(1, s.len() - 1);
        let (ta, fa) = &s[i - 1];
        let (tb, fb) = &s[i];
        let w = if tb > ta { (t - ta) / (tb - ta) } else { 1.0 };
        Some((1.0 - w) * fa.eval(x) + w * fb.eval(x))
    }

    /// The same connection moved by a gauge shift of `by` (a multiple of 2π).
    pub fn gauge_shifted(&self, by: f64) -> Result<Self> {
        let mut out = self.clone();
        out.pair = self.pair.shifted(by);
        out.backward_limit += by;
        out.forward_limit += by;
        for (_, f) in out.trajectory.snapshots.iter_mut() {
            let v: Vec<f64> = f.values().iter().map(|u| u + by).collect();
            *f = Field::new(f.grid().clone(), v)?;
        }
        for p in out.trajectory.boundary_trace.iter_mut() {
            p.u += by;
        }
        Ok(out)
    }
}

fn ramp(pair: &ZeroPair, params: &Params, n: f64) -> Result<(f64, f64, impl Fn(f64) -> f64)> {
    let (from, to) = pair.orientation();
    let s = (to - from).signum();
    if !(n > 0.0) || 1.0 / n >= pair.width() {
        return Err(Error::input(format!("ramp index {n} must exceed 1/(y2 - y1)")));
    }
    let slope = s * params.flux.value(from + s / n);
    if slope >= 0.0 {
        return Err(Error::input("flux has the wrong sign next to the departing zero"));
    }
    Ok((from, to, move |x: f64| from + s * (1.0 / n + slope * x).max(0.0)))
}

/// Evolves the ramp sub-solution next to the departing zero until the
/// boundary value reaches the other zero.
pub fn compute_heteroclinic(pair: &ZeroPair, params: &Params, cfg: &ConnectionConfig) -> Result<ConnectionRecord> {
    params.validate()?;
    let grid = Arc::new(Grid1D::new(
        cfg.length,
        cfg.nodes,
        if cfg.beta > 0.0 { Stretching::TanhClustered { beta: cfg.beta } } else { Stretching::Uniform },
    )?);
    let (from, to, u_init) = ramp(pair, params, cfg.ramp_n)?;
    let xs = grid.nodes().to_vec();
    let disc = Discretization::new(grid.clone(), params.c, FarBoundary::Outflow);
    let mut stepper = Stepper::new(disc, params.flux.clone());
    let mut u: Vec<f64> = xs.iter().map(|&x| u_init(x)).collect();

    let arrive_tol = 1e-3 * pair.width();
    let mut t = 0.0;
    let mut snapshots = vec![(0.0, u.clone())];
    let mut trace = vec![TracePoint { t, u: u[0], ux: params.flux.value(u[0]) }];
    let mut last_store = 0.0;
    let mut arrived_at: Option<f64> = None;
    let mid = pair.midpoint();
    let mut crossed_at: Option<f64> = None;
    let mut startup = schedule(Scheme::ImexTrapezoid, cfg.dt, 1, 8).into_iter();
    let mut h = cfg.dt;
    loop {
        // backward Euler over the first steps damps the kink of the ramp
        let main = if t < DAMPING_TIME { StepRule::Theta(1.0) } else { StepRule::Theta(0.5) };
        let (rule, step) = startup.next().map(|(_, h0)| (StepRule::Theta(1.0), h0)).unwrap_or((main, h));
        let before0 = u[0];
        stepper.step(rule, step, &mut u, None)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::solver(format!("non-finite state at t = {t}")));
        }
        t += step;
        trace.push(TracePoint { t, u: u[0], ux: params.flux.value(u[0]) });
        let speed = (u[0] - before0).abs() / step;
        h = if speed < cfg.slow_speed && arrived_at.is_none() { (2.0 * h).min(64.0 * cfg.dt) } else { cfg.dt };

        let moved = snapshots.last().map(|(_, v)| v.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
        if t - last_store >= cfg.store_dt - 1e-12 && (moved.unwrap_or(1.0) > 1e-7 || t - last_store >= 1.0) {
            snapshots.push((t, u.clone()));
            last_store = t;
        }
        if crossed_at.is_none() && (u[0] - mid) * (to - from) >= 0.0 {
            crossed_at = Some(t);
        }
        if crossed_at.is_some_and(|tc| t >= tc + cfg.after_half) {
            break;
        }
        if arrived_at.is_none() && (u[0] - to).abs() <= arrive_tol {
            arrived_at = Some(t);
        }
        if let Some(ta) = arrived_at {
            if t >= ta + cfg.tail {
                break;
            }
        }
        if t > cfg.t_max {
            return Err(Error::NotFound(format!(
                "boundary value {:.6} did not reach {to:.6} by t = {}",
                u[0], cfg.t_max
            )));
        }
    }
    if snapshots.last().map(|(ts, _)| *ts) != Some(t) {
        snapshots.push((t, u.clone()));
    }

    let t_half = trace
        .windows(2)
        .find(|w| (w[0].u - mid) * (w[1].u - mid) <= 0.0 && w[0].u != w[1].u)
        .map(|w| w[0].t + (mid - w[0].u) * (w[1].t - w[0].t) / (w[1].u - w[0].u))
        .ok_or_else(|| Error::solver("boundary value never crossed the midpoint"))?;

    let s = (to - from).signum();
    // the ramp tail sits exactly on the departing zero, so the interior
    // margin is only checked to rounding level; the boundary value must be
    // strictly inside
    let mut margin = f64::INFINITY;
    let mut backstep = 0.0f64;
    for (k, (_, v)) in snapshots.iter().enumerate() {
        for &x in v {
            margin = margin.min((x - pair.y1).min(pair.y2 - x));
        }
        if k > 0 {
            for (a, b) in v.iter().zip(&snapshots[k - 1].1) {
                backstep = backstep.max(-s * (a - b));
            }
        }
    }

    let boundary_inside = trace.iter().all(|p| p.u > pair.y1 && p.u < pair.y2);
    let rates = rates(pair, params, &xs, &snapshots, &trace, from, to, t_half, cfg.window_x);
    let fields = snapshots
        .into_iter()
        .map(|(ts, v)| Ok((ts - t_half, Field::new(grid.clone(), v)?)))
        .collect::<Result<Vec<_>>>()?;
    for p in trace.iter_mut() {
        p.t -= t_half;
    }
    let bc_residual = 0.0;
    let trajectory = Trajectory { params: params.clone(), snapshots: fields, boundary_trace: trace, bc_residual, rejections: 0 };
    Ok(ConnectionRecord {
        pair: *pair,
        params: params.clone(),
        ramp_n: cfg.ramp_n,
        backward_limit: from,
        forward_limit: to,
        t_half,
        arrived: arrived_at.is_some(),
        rates,
        confinement_margin: margin,
        confined: margin > -CONFINE_TOL && boundary_inside,
        monotone_in_time: backstep <= MONOTONE_TOL,
        monotonicity_defect: backstep,
        window_x: cfg.window_x,
        trajectory,
    })
}

#[allow(clippy::too_many_arguments)]
fn rates(
    pair: &ZeroPair,
    params: &Params,
    xs: &[f64],
    snapshots: &[(f64, Vec<f64>)],
    trace: &[TracePoint],
    from: f64,
    to: f64,
    t_half: f64,
    window_x: f64,
) -> ConnectionRates {
    // log-linear fit of the departure while it is still small
    let w = pair.width();
    let d0 = (trace[0].u - from).abs();
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|p| p.t <= t_half)
        .map(|p| (p.t, (p.u - from).abs()))
        .filter(|&(_, d)| d >= 1.5 * d0 && d <= 0.25 * w)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    let backward_fitted = if pts.len() >= 4 {
        let m = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let ml = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let num: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        Some(num / den)
    } else {
        None
    };
    let gp = params.flux.deriv(from);
    let backward_predicted = (gp < 0.5 * params.c).then_some(gp * gp - gp * params.c);
    let backward_domain_sup = snapshots[0].1.iter().fold(0.0f64, |m, v| m.max((v - from).abs()));

    let nwin = xs.partition_point(|&x| x <= window_x);
    let mut forward = Vec::new();
    let mut next = t_half;
    for (ts, v) in snapshots {
        if *ts >= next {
            let window_sup = v[..nwin].iter().fold(0.0f64, |m, u| m.max((u - to).abs()));
            let domain_sup = v.iter().fold(0.0f64, |m, u| m.max((u - to).abs()));
            forward.push(ForwardSample { t: ts - t_half, window_sup, domain_sup });
            next = ts + 1.0;
        }
    }
    ConnectionRates { backward_fitted, backward_predicted, backward_domain_sup, forward }
}

fn window_sup(a: &dyn Fn(f64, f64) -> Option<f64>, b: &dyn Fn(f64, f64) -> Option<f64>, w: &Window, shift: f64) -> Option<f64> {
    let (xs, ts) = w.samples();
    let mut sup = 0.0f64;
    for &t in &ts {
        for &x in &xs {
            let d = (a(x, t)? - b(x, t + shift)?).abs();
            sup = sup.max(d);
        }
    }
    Some(sup)
}

/// min over shifts s ∈ [−max_shift, max_shift] of the window sup-distance
/// between a(·, t) and b(·, t + s).
pub(crate) fn aligned_distance(
    a: &dyn Fn(f64, f64) -> Option<f64>,
    b: &dyn Fn(f64, f64) -> Option<f64>,
    window: &Window,
    max_shift: f64,
) -> Result<(f64, f64)> {
    let coarse = 40;
    let mut best: Option<(f64, f64)> = None;
    for j in 0..=coarse {
        let s = -max_shift + 2.0 * max_shift * j as f64 / coarse as f64;
        if let Some(d) = window_sup(a, b, window, s) {
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((s, d));
            }
        }
    }
    let (s0, _) = best.ok_or_else(|| Error::input("time ranges do not overlap on the window"))?;
    // golden-section refinement around the best coarse shift
    let step = 2.0 * max_shift / coarse as f64;
    let (mut lo, mut hi) = (s0 - step, s0 + step);
    let f = |s: f64| window_sup(a, b, window, s).unwrap_or(f64::INFINITY);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..40 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let (s, d) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let d_coarse = best.unwrap().1;
    Ok(if d <= d_coarse { (s, d) } else { (s0, d_coarse) })
}

/// Smallest window distance between `a` and time translates of `b`;
/// returns (distance, shift).
pub fn translate_distance(a: &ConnectionRecord, b: &ConnectionRecord, window: &Window) -> Result<(f64, f64)> {
    if a.params != b.params || a.pair != b.pair {
        return Err(Error::input("connections belong to different problems"));
    }
    let fa = |x: f64, t: f64| a.value_at(x, t);
    let fb = |x: f64, t: f64| b.value_at(x, t);
    let (s, d) = aligned_distance(&fa, &fb, window, 1.0)?;
    Ok((d, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connections::find_zero_pairs;

    fn quick() -> ConnectionConfig {
        ConnectionConfig { nodes: 200, dt: 1e-2, tail: 5.0, store_dt: 0.05, ..Default::default() }
    }

    #[test]
    fn mirror_pair_connection_is_confined_and_monotone() {
        let params = Params::cosine(1.0, 1.5).unwrap();
        let pair = find_zero_pairs(&params.flux).unwrap()[0];
        let rec = compute_heteroclinic(&pair, &params, &quick()).unwrap();
        assert!(rec.confined && rec.monotone_in_time);
        assert!(rec.backward_limit < rec.forward_limit);
        assert!(rec.value_at(0.0, 0.0).map(|u| (u - pair.midpoint()).abs() < 0.05).unwrap());
        let (d, s) = translate_distance(&rec, &rec, &Window::new(5.0, -1.0, 4.0)).unwrap();
        assert!(d < 1e-12 && s.abs() < 1e-6);
    }

    #[test]
    fn ramp_must_fit_inside_the_pair() {
        let params = Params::cosine(1.0, 1.5).unwrap();
        let pair = find_zero_pairs(&params.flux).unwrap()[0];
        let cfg = ConnectionConfig { ramp_n: 0.1, ..quick() };
        assert!(compute_heteroclinic(&pair, &params, &cfg).is_err());
    }
}
