//! Method-of-lines discretization and implicit time steps.
//!
//! The semi-discrete system is du/dt = A u + b + e0·N(u0) where A is
//! tridiagonal, b is a constant forcing from the far boundary and
//! N(u0) = −(2/h0 + c)·g(u0) is the ghost-node elimination of the flux
//! condition. Every implicit step solves (I − aA)u = r + e0·a·N(u0), which
//! reduces to a scalar equation for the boundary value once
//! q = (I − aA)⁻¹e0 is known.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::Grid1D;
use crate::linalg::TridiagLu;

/// Condition imposed at the truncation point x = L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FarBoundary {
    /// u_xx = 0 at L, so u_t = −c u_x there; exact for affine tails.
    Outflow,
    /// u_x = strain at L.
    NeumannStrain { strain: f64 },
    /// ũ = e^{−cL/2}u = 0 at L; only meaningful for decaying data.
    WeightedDirichletZero,
}

#[derive(Debug, Clone)]
pub struct Discretization {
    grid: Arc<Grid1D>,
    c: f64,
    far: FarBoundary,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    far_forcing: f64,
    gain: f64,
}

impl Discretization {
    pub fn new(grid: Arc<Grid1D>, c: f64, far: FarBoundary) -> Self {
        let xs = grid.nodes();
        let n = xs.len();
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n - 1];
        let h0 = xs[1] - xs[0];
        diag[0] = -2.0 / (h0 * h0);
        sup[0] = 2.0 / (h0 * h0);
        for i in 1..n - 1 {
            let hm = xs[i] - xs[i - 1];
            let hp = xs[i + 1] - xs[i];
            let s = hm + hp;
            sub[i - 1] = 2.0 / (hm * s) + c * hp / (hm * s);
            diag[i] = -2.0 / (hm * hp) - c * (hp - hm) / (hm * hp);
            sup[i] = 2.0 / (hp * s) - c * hm / (hp * s);
        }
        let hl = xs[n - 1] - xs[n - 2];
        let mut far_forcing = 0.0;
        match far {
            FarBoundary::Outflow => {
                sub[n - 2] = c / hl;
                diag[n - 1] = -c / hl;
            }
            FarBoundary::NeumannStrain { strain } => {
                sub[n - 2] = 2.0 / (hl * hl);
                diag[n - 1] = -2.0 / (hl * hl);
                far_forcing = 2.0 * strain / hl - c * strain;
            }
            FarBoundary::WeightedDirichletZero => {
                sub[n - 2] = 0.0;
                diag[n - 1] = 0.0;
            }
        }
        Self { grid, c, far, sub, diag, sup, far_forcing, gain: 2.0 / h0 + c }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn far(&self) -> FarBoundary {
        self.far
    }

    /// out = A u (without forcing).
    pub fn apply_linear(&self, u: &[f64], out: &mut [f64]) {
        crate::linalg::tridiag_mul(&self.sub, &self.diag, &self.sup, u, out);
    }

    /// Boundary nonlinearity N(u0).
    #[inline]
    pub fn boundary_term(&self, flux: &FluxModel, u0: f64) -> f64 {
        -self.gain * flux.value(u0)
    }

    #[inline]
    pub fn boundary_term_deriv(&self, flux: &FluxModel, u0: f64) -> f64 {
        -self.gain * flux.deriv(u0)
    }

    /// Full semi-discrete vector field.
    pub fn rhs(&self, flux: &FluxModel, u: &[f64], out: &mut [f64]) {
        self.apply_linear(u, out);
        let n = out.len();
        out[n - 1] += self.far_forcing;
        out[0] += self.boundary_term(flux, u[0]);
    }

    /// Linearization of `rhs` at `base` applied to `v`.
    pub fn rhs_tangent(&self, flux: &FluxModel, base0: f64, v: &[f64], out: &mut [f64]) {
        self.apply_linear(v, out);
        out[0] += self.boundary_term_deriv(flux, base0) * v[0];
    }

    /// Projects a state onto the far condition where it constrains values.
    pub fn enforce(&self, u: &mut [f64]) {
        if let FarBoundary::WeightedDirichletZero = self.far {
            let n = u.len();
            u[n - 1] = 0.0;
        }
    }

    /// Trapezoid step of the linear problem with a prescribed boundary
    /// slope u_x(0, t) = s(t), moving from slope `s_old` to `s_new`.
    pub fn step_prescribed(&self, dt: f64, u: &mut [f64], s_old: f64, s_new: f64) {
        let n = u.len();
        let a = 0.5 * dt;
        let mut r = vec![0.0; n];
        self.apply_linear(u, &mut r);
        for i in 0..n {
            r[i] = u[i] + a * r[i];
        }
        r[n - 1] += dt * self.far_forcing;
        r[0] -= a * self.gain * (s_old + s_new);
        let f = self.factor(a);
        f.lu.solve_in_place(&mut r);
        u.copy_from_slice(&r);
        self.enforce(u);
    }

    fn factor(&self, a: f64) -> Factor {
        let n = self.len();
        let sub: Vec<f64> = self.sub.iter().map(|v| -a * v).collect();
        let sup: Vec<f64> = self.sup.iter().map(|v| -a * v).collect();
        let diag: Vec<f64> = self.diag.iter().map(|v| 1.0 - a * v).collect();
        let lu = TridiagLu::new(&sub, &diag, &sup);
        let mut q = vec![0.0; n];
        q[0] = 1.0;
        lu.solve_in_place(&mut q);
        Factor { a, lu, q }
    }
}

#[derive(Debug, Clone)]
struct Factor {
    a: f64,
    lu: TridiagLu,
    q: Vec<f64>,
}

/// One implicit step rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// θ-method; θ = 1/2 is the trapezoid rule, θ = 1 backward Euler.
    Theta(f64),
    /// Second-order backward differentiation (needs the previous state).
    Bdf2,
}

pub const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

/// Executes implicit steps, caching factorizations by effective step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    disc: Discretization,
    flux: FluxModel,
    cache: Vec<Factor>,
    work: Vec<f64>,
}

/// Result of one step: the boundary Newton iteration count and the final
/// scalar residual.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub newton_iterations: usize,
    pub boundary_residual: f64,
}

impl Stepper {
    pub fn new(disc: Discretization, flux: FluxModel) -> Self {
        let n = disc.len();
        Self { disc, flux, cache: Vec::new(), work: vec![0.0; n] }
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn flux(&self) -> &FluxModel {
        &self.flux
    }

    fn factor_index(&mut self, a: f64) -> usize {
        if let Some(i) = self.cache.iter().position(|f| f.a == a) {
            return i;
        }
        if self.cache.len() >= 8 {
            self.cache.remove(0);
        }
        self.cache.push(self.disc.factor(a));
        self.cache.len() - 1
    }

    /// Advances `u` (and `prev` for BDF2) by one step of size `dt`.
    pub fn step(&mut self, rule: StepRule, dt: f64, u: &mut [f64], prev: Option<&[f64]>) -> Result<StepInfo> {
        let n = u.len();
        let (a, rhs) = {
            let mut r = std::mem::take(&mut self.work);
            let a = match rule {
                StepRule::Theta(theta) => {
                    self.disc.rhs(&self.flux, u, &mut r);
                    let expl = (1.0 - theta) * dt;
                    for i in 0..n {
                        r[i] = u[i] + expl * r[i];
                    }
                    r[n - 1] += theta * dt * self.disc.far_forcing;
                    theta * dt
                }
                StepRule::Bdf2 => {
                    let prev = prev.ok_or_else(|| Error::solver("BDF2 step needs the previous state"))?;
                    for i in 0..n {
                        r[i] = (4.0 * u[i] - prev[i]) / 3.0;
                    }
                    r[n - 1] += 2.0 * dt / 3.0 * self.disc.far_forcing;
                    2.0 * dt / 3.0
                }
            };
            (a, r)
        };
        let idx = self.factor_index(a);
        let mut p = rhs;
        self.cache[idx].lu.solve_in_place(&mut p);
        let q0 = self.cache[idx].q[0];
        let (s, info) = match solve_boundary(&self.disc, &self.flux, a, p[0], q0) {
            Ok(v) => v,
            Err(e) => {
                self.work = p;
                return Err(e);
            }
        };
        let q = &self.cache[idx].q;
        for i in 0..n {
            u[i] = p[i] + s * q[i];
        }
        self.disc.enforce(u);
        self.work = p;
        Ok(info)
    }

    /// Tangent of [`Stepper::step`] at the base transition `from -> to`.
    pub fn step_tangent(
        &mut self,
        rule: StepRule,
        dt: f64,
        from: &[f64],
        to: &[f64],
        v: &mut [f64],
        vprev: Option<&[f64]>,
    ) -> Result<()> {
        let n = v.len();
        let mut r = vec![0.0; n];
        let a = match rule {
            StepRule::Theta(theta) => {
                self.disc.rhs_tangent(&self.flux, from[0], v, &mut r);
                let expl = (1.0 - theta) * dt;
                for i in 0..n {
                    r[i] = v[i] + expl * r[i];
                }
                theta * dt
            }
            StepRule::Bdf2 => {
                let vp = vprev.ok_or_else(|| Error::solver("BDF2 tangent needs the previous state"))?;
                for i in 0..n {
                    r[i] = (4.0 * v[i] - vp[i]) / 3.0;
                }
                2.0 * dt / 3.0
            }
        };
        let idx = self.factor_index(a);
        self.cache[idx].lu.solve_in_place(&mut r);
        let f = &self.cache[idx];
        let dn = a * self.disc.boundary_term_deriv(&self.flux, to[0]);
        let ds = dn * r[0] / (1.0 - dn * f.q[0]);
        for i in 0..n {
            v[i] = r[i] + ds * f.q[i];
        }
        if let FarBoundary::WeightedDirichletZero = self.disc.far {
            v[n - 1] = 0.0;
        }
        Ok(())
    }
}

/// Solves s = a·N(p0 + s·q0) by Newton's method.
fn solve_boundary(disc: &Discretization, flux: &FluxModel, a: f64, p0: f64, q0: f64) -> Result<(f64, StepInfo)> {
    let mut s = a * disc.boundary_term(flux, p0);
    for it in 0..NEWTON_MAX_ITER {
        let u0 = p0 + s * q0;
        let res = s - a * disc.boundary_term(flux, u0);
        let jac = 1.0 - a * disc.boundary_term_deriv(flux, u0) * q0;
        if jac == 0.0 || !jac.is_finite() {
            break;
        }
        let ds = res / jac;
        s -= ds;
        if !s.is_finite() {
            break;
        }
        if (ds * q0).abs() <= NEWTON_TOL * 1e-3 * (1.0 + u0.abs()) {
            let u0 = p0 + s * q0;
            let res = (s - a * disc.boundary_term(flux, u0)).abs() * q0.abs();
            return Ok((s, StepInfo { newton_iterations: it + 1, boundary_residual: res }));
        }
    }
    bisect_boundary(disc, flux, a, p0, q0)
}

/// Fallback for [`solve_boundary`] when Newton cycles: the flux is bounded,
/// so the scalar residual changes sign on a wide enough interval.
fn bisect_boundary(disc: &Discretization, flux: &FluxModel, a: f64, p0: f64, q0: f64) -> Result<(f64, StepInfo)> {
    let f = |s: f64| s - a * disc.boundary_term(flux, p0 + s * q0);
    let centre = a * disc.boundary_term(flux, p0);
    let mut width = 1.0 + centre.abs();
    let (mut lo, mut hi) = (centre - width, centre + width);
    let mut expansions = 0;
    while f(lo) > 0.0 || f(hi) < 0.0 {
        width *= 2.0;
        lo = centre - width;
        hi = centre + width;
        expansions += 1;
        if expansions > 60 || !width.is_finite() {
            return Err(Error::solver("boundary Newton iteration did not converge"));
        }
    }
    let mut iterations = 0;
    while (hi - lo) * q0.abs() > NEWTON_TOL * 1e-3 * (1.0 + (p0 + lo * q0).abs()) && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let s = 0.5 * (lo + hi);
    Ok((s, StepInfo { newton_iterations: NEWTON_MAX_ITER + iterations, boundary_residual: f(s).abs() * q0.abs() }))
}

/// Step schedule of a run of `steps` steps of size `dt`. With
/// `grading = m > 0` the first step is replaced by two backward-Euler steps
/// of size dt/2^{m+1} followed by steps dt/2^m, ..., dt/2 of the main rule,
/// which resolves the initial layer of incompatible data.
pub fn schedule(scheme: super::Scheme, dt: f64, steps: usize, grading: usize) -> Vec<(StepRule, f64)> {
    let mut out = Vec::with_capacity(steps + grading + 2);
    if steps == 0 {
        return out;
    }
    let main = match scheme {
        super::Scheme::ImexTrapezoid => StepRule::Theta(0.5),
        super::Scheme::ImplicitNewton => StepRule::Bdf2,
    };
    let graded_rule = StepRule::Theta(if main == StepRule::Bdf2 { 1.0 } else { 0.5 });
    let mut rest = steps;
    if grading > 0 {
        let base = dt / 2f64.powi(grading as i32);
        out.push((StepRule::Theta(1.0), 0.5 * base));
        out.push((StepRule::Theta(1.0), 0.5 * base));
        for j in (1..=grading).rev() {
            out.push((graded_rule, dt / 2f64.powi(j as i32)));
        }
        rest -= 1;
    }
    out.extend(std::iter::repeat_n((main, dt), rest));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_schedule_sums_to_total() {
        for scheme in [super::super::Scheme::ImexTrapezoid, super::super::Scheme::ImplicitNewton] {
            for grading in [0, 1, 6] {
                let plan = schedule(scheme, 0.1, 7, grading);
                let total: f64 = plan.iter().map(|(_, h)| h).sum();
                assert!((total - 0.7).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bisection_fallback_agrees_with_newton() {
        let disc = setup(1.0, FarBoundary::Outflow, 50);
        let flux = FluxModel::cosine(0.6);
        for (a, p0, q0) in [(0.01, 0.3, 0.5), (2.0, -40.0, 0.8), (50.0, 7.0, 0.2)] {
            let (sb, _) = bisect_boundary(&disc, &flux, a, p0, q0).unwrap();
            let res = sb - a * disc.boundary_term(&flux, p0 + sb * q0);
            assert!(res.abs() * q0 < 1e-10 * (1.0 + p0.abs()), "a={a}: residual {res:e}");
            if let Ok((sn, _)) = solve_boundary(&disc, &flux, a, p0, q0) {
                let resn = sn - a * disc.boundary_term(&flux, p0 + sn * q0);
                assert!(resn.abs() * q0 < 1e-10 * (1.0 + p0.abs()));
            }
        }
    }

    fn setup(c: f64, far: FarBoundary, n: usize) -> Discretization {
        let grid = Arc::new(Grid1D::uniform(12.0, n).unwrap());
        Discretization::new(grid, c, far)
    }

    #[test]
    fn affine_data_is_exact_for_outflow() {
        // u = x − ct solves the problem with g ≡ 1
        let d = setup(1.0, FarBoundary::Outflow, 64);
        let flux = FluxModel::cosine(0.0);
        let u: Vec<f64> = d.grid().nodes().to_vec();
        let mut f = vec![0.0; u.len()];
        d.rhs(&flux, &u, &mut f);
        assert!(f.iter().all(|v| (v + 1.0).abs() < 1e-9), "{f:?}");
    }

    #[test]
    fn tangent_matches_finite_difference() {
        let d = setup(1.0, FarBoundary::Outflow, 40);
        let flux = FluxModel::cosine(0.6);
        let mut st = Stepper::new(d, flux);
        let u0: Vec<f64> = st.disc().grid().nodes().iter().map(|x| 0.3 + 0.8 * x + (x).sin()).collect();
        let v: Vec<f64> = st.disc().grid().nodes().iter().map(|x| (-x).exp()).collect();
        for rule in [StepRule::Theta(0.5), StepRule::Theta(1.0)] {
            let mut to = u0.clone();
            st.step(rule, 0.05, &mut to, None).unwrap();
            let eps = 1e-6;
            let mut up: Vec<f64> = u0.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
            let mut um: Vec<f64> = u0.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
            st.step(rule, 0.05, &mut up, None).unwrap();
            st.step(rule, 0.05, &mut um, None).unwrap();
            let mut tv = v.clone();
            st.step_tangent(rule, 0.05, &u0, &to, &mut tv, None).unwrap();
            for i in 0..tv.len() {
                let fd = (up[i] - um[i]) / (2.0 * eps);
                assert!((fd - tv[i]).abs() < 1e-7, "{i}: {fd} vs {}", tv[i]);
            }
        }
    }

    #[test]
    fn boundary_equation_solved() {
        let d = setup(2.0, FarBoundary::NeumannStrain { strain: 1.0 }, 50);
        let flux = FluxModel::cosine(0.9);
        let mut st = Stepper::new(d, flux);
        let mut u: Vec<f64> = st.disc().grid().nodes().iter().map(|x| 1.0 + x).collect();
        let info = st.step(StepRule::Theta(0.5), 0.1, &mut u, None).unwrap();
        assert!(info.boundary_residual < NEWTON_TOL);
    }
}
