//! Boundary integral reference solver.
//!
//! In weighted variables ũ = e^{−cx/2}u the boundary value φ(t) = u(0,t)
//! satisfies
//!
//!   φ(t) = F(t) − (1/√π) ∫_0^t (t−s)^{−1/2} e^{−c²(t−s)/4} B(φ(s)) ds,
//!
//! with B(v) = g(v) − (c/2)v and F the Neumann heat flow of ũ0 evaluated
//! at x = 0. The integral is discretized by product integration against
//! piecewise-linear interpolants and solved by fixed-point iteration on
//! blocks short enough for the map to contract.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::quad::GaussLegendre;
use crate::Params;

use super::{TracePoint, Trajectory};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
/// Gaussian tails are cut at z = 7 (e^{−49} ≈ 5e−22).
const TAIL_Z: f64 = 7.0;

#[derive(Debug, Clone)]
pub struct VolterraConfig {
    pub dt: f64,
    /// Times at which full profiles are reconstructed (t_end is always added).
    pub snapshot_times: Vec<f64>,
    /// Output mesh for reconstructed profiles; defaults to the initial grid.
    pub snapshot_grid: Option<Arc<Grid1D>>,
    /// Fixed-point tolerance on the boundary trace.
    pub tol: f64,
}

impl VolterraConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, snapshot_times: Vec::new(), snapshot_grid: None, tol: 1e-13 }
    }
}

/// Product-integration weights for ∫_0^{t_n} (t_n − s)^{−1/2} f(s) ds with f
/// piecewise linear on a uniform mesh of step `h`. Returns (left, right)
/// weights of the interval at distance index k, i.e. [t_n − (k+1)h, t_n − kh].
fn interval_weights(k: usize, h: f64) -> (f64, f64) {
    let r_far = (k + 1) as f64 * h;
    let r_near = k as f64 * h;
    let i0 = 2.0 * (r_far.sqrt() - r_near.sqrt());
    let i1 = (r_far * i0 - (2.0 / 3.0) * (r_far.powf(1.5) - r_near.powf(1.5))) / h;
    (i0 - i1, i1)
}

struct Kernel {
    left: Vec<f64>,
    right: Vec<f64>,
    decay: Vec<f64>,
}

impl Kernel {
    fn new(n: usize, h: f64, c: f64) -> Self {
        let (left, right) = (0..n.max(1)).map(|k| interval_weights(k, h)).unzip();
        let decay = (0..=n).map(|m| (-0.25 * c * c * m as f64 * h).exp()).collect();
        Self { left, right, decay }
    }

    /// Weight of node j in the rule ending at node n.
    #[inline]
    fn weight(&self, n: usize, j: usize) -> f64 {
        let m = n - j;
        let mut w = 0.0;
        if j > 0 {
            w += self.right[m];
        }
        if j < n {
            w += self.left[m - 1];
        }
        w * self.decay[m]
    }
}

/// Weighted initial datum ũ0(y) = e^{−cy/2}u0(y) with affine continuation.
fn weighted_initial(u0: &Field, c: f64) -> impl Fn(f64) -> f64 + '_ {
    move |y: f64| (-0.5 * c * y).exp() * u0.eval(y)
}

/// ∫_0^∞ (Γ(x−y,t) + Γ(x+y,t)) ũ0(y) dy by Gaussian substitution.
fn initial_part(w0: &dyn Fn(f64) -> f64, x: f64, t: f64, c: f64, gl: &GaussLegendre) -> f64 {
    if t == 0.0 {
        return w0(x);
    }
    let s = 2.0 * t.sqrt();
    let pref = FRAC_1_SQRT_PI * (-0.25 * c * c * t).exp();
    let panels = 16;
    let lo = (-x / s).max(-TAIL_Z);
    let direct = if lo < TAIL_Z { gl.composite(lo, TAIL_Z, panels, |z| (-z * z).exp() * w0(x + s * z)) } else { 0.0 };
    let lo = x / s;
    let image = if lo < TAIL_Z { gl.composite(lo, TAIL_Z, panels, |z| (-z * z).exp() * w0(s * z - x)) } else { 0.0 };
    pref * (direct + image)
}

pub fn evolve_volterra(params: &Params, u0: &Field, t_end: f64, cfg: &VolterraConfig) -> Result<Trajectory> {
    params.validate()?;
    if !(cfg.dt > 0.0) || !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::input("volterra solver needs dt > 0 and finite t_end > 0"));
    }
    let c = params.c;
    let flux = &params.flux;
    let n = (t_end / cfg.dt).ceil().max(1.0) as usize;
    let h = t_end / n as f64;
    let times: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let gl = GaussLegendre::new(20);
    let w0 = weighted_initial(u0, c);
    let forcing: Vec<f64> = times.iter().map(|&t| initial_part(&w0, 0.0, t, c, &gl)).collect();
    let kernel = Kernel::new(n, h, c);
    let b = |v: f64| flux.value(v) - 0.5 * c * v;

    // contraction: (2/√π)√τ·Lip(B) ≤ 1/2
    let lip = flux.lipschitz() + 0.5 * c;
    let tau_max = if lip > 0.0 { PI / (16.0 * lip * lip) } else { t_end };
    let mut block = ((tau_max / h).floor() as usize).clamp(1, n);

    let mut phi = vec![0.0; n + 1];
    let mut bphi = vec![0.0; n + 1];
    phi[0] = u0.at_origin();
    bphi[0] = b(phi[0]);
    let mut start = 1;
    while start <= n {
        let end = (start + block - 1).min(n);
        // history from nodes before the block
        let hist: Vec<f64> = (start..=end)
            .map(|m| (0..start).map(|j| kernel.weight(m, j) * bphi[j]).sum::<f64>())
            .collect();
        // extrapolated initial guess
        for m in start..=end {
            phi[m] = if m >= 2 { 2.0 * phi[m - 1] - phi[m - 2] } else { phi[m - 1] };
            bphi[m] = b(phi[m]);
        }
        let mut last_change = f64::INFINITY;
        let mut converged = false;
        for _ in 0..200 {
            let mut change: f64 = 0.0;
            let mut next = vec![0.0; end - start + 1];
            for m in start..=end {
                let local: f64 = (start..=m).map(|j| kernel.weight(m, j) * bphi[j]).sum();
                next[m - start] = forcing[m] - FRAC_1_SQRT_PI * (hist[m - start] + local);
            }
            for m in start..=end {
                change = change.max((next[m - start] - phi[m]).abs());
                phi[m] = next[m - start];
                bphi[m] = b(phi[m]);
            }
            if !change.is_finite() || change > 2.0 * last_change && last_change < f64::INFINITY {
                break;
            }
            if change <= cfg.tol * (1.0 + phi[end].abs()) {
                converged = true;
                break;
            }
            last_change = change;
        }
        if !converged {
            if block == 1 {
                return Err(Error::solver(format!("boundary fixed point does not contract at t = {}", times[start])));
            }
            block = (block / 2).max(1);
            continue;
        }
        start = end + 1;
    }

    // profile reconstruction
    let out_grid = cfg.snapshot_grid.clone().unwrap_or_else(|| u0.grid().clone());
    let mut snap_times: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|&t| t > 0.0 && t < t_end).collect();
    snap_times.push(t_end);
    snap_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snap_times.dedup();
    let phi_at = |s: f64| -> f64 {
        let pos = (s / h).clamp(0.0, n as f64);
        let j = (pos.floor() as usize).min(n - 1);
        let f = pos - j as f64;
        phi[j] * (1.0 - f) + phi[j + 1] * f
    };
    let mut snapshots = vec![(0.0, Field::new(out_grid.clone(), out_grid.nodes().iter().map(|&x| u0.eval(x)).collect())?)];
    for &t in &snap_times {
        let rt = t.sqrt();
        let values: Vec<f64> = out_grid
            .nodes()
            .iter()
            .map(|&x| {
                let init = initial_part(&w0, x, t, c, &gl);
                let layer = gl.composite(0.0, rt, 16, |sig| {
                    if sig == 0.0 {
                        return 0.0;
                    }
                    (-0.25 * c * c * sig * sig - x * x / (4.0 * sig * sig)).exp() * b(phi_at(t - sig * sig))
                });
                (0.5 * c * x).exp() * (init - 2.0 * FRAC_1_SQRT_PI * layer)
            })
            .collect();
        snapshots.push((t, Field::new(out_grid.clone(), values)?));
    }
    let trace = times
        .iter()
        .zip(&phi)
        .map(|(&t, &u)| TracePoint { t, u, ux: flux.value(u) })
        .collect();
    Ok(Trajectory { params: params.clone(), snapshots, boundary_trace: trace, bc_residual: 0.0, rejections: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::FluxModel;

    #[test]
    fn weights_integrate_linear_functions_exactly() {
        let h = 0.1;
        let n = 7;
        let k = Kernel::new(n, h, 0.0);
        let t = n as f64 * h;
        let w: f64 = (0..=n).map(|j| k.weight(n, j)).sum();
        assert!((w - 2.0 * t.sqrt()).abs() < 1e-14);
        // ∫_0^t (t−s)^{−1/2} s ds = (4/3) t^{3/2}
        let m: f64 = (0..=n).map(|j| k.weight(n, j) * j as f64 * h).sum();
        assert!((m - 4.0 / 3.0 * t.powf(1.5)).abs() < 1e-13);
    }

    #[test]
    fn constant_unit_flux_closed_form() {
        let params = Params::new(0.0, FluxModel::constant(1.0)).unwrap();
        let grid = Arc::new(Grid1D::uniform(10.0, 32).unwrap());
        let u0 = Field::constant(grid, 0.0).unwrap();
        let tr = evolve_volterra(&params, &u0, PI, &VolterraConfig::new(PI / 400.0)).unwrap();
        let end = tr.boundary_trace.last().unwrap();
        assert!((end.u + 2.0).abs() < 1e-6, "{}", end.u);
        // reconstructed profile: −2√t·ierfc(x/(2√t)), with ierfc(z) = e^{−z²}/√π − z·erfc(z)
        let f = tr.final_field();
        for (&x, &u) in f.grid().nodes().iter().zip(f.values()) {
            let z = x / (2.0 * PI.sqrt());
            let ierfc = (-z * z).exp() * FRAC_1_SQRT_PI - z * crate::special::erfc(z);
            assert!((u + 2.0 * PI.sqrt() * ierfc).abs() < 1e-6, "x={x}");
        }
    }
}
