use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::linalg::{tridiag_mul, TridiagLu};

/// State in similarity variables on a uniform grid of [0, xi_max].
/// η = e^{τ/2} measures the size of the neglected part of the flux.
#[derive(Debug, Clone, Serialize)]
pub struct SimilarityState {
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    pub tau: f64,
    pub eta: f64,
}

impl SimilarityState {
    pub fn from_fn(xi_max: f64, n: usize, tau: f64, eta: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 8 || !(xi_max > 0.0) || !(eta >= 0.0) {
            return Err(Error::input("similarity grid needs n >= 8, xi_max > 0 and eta >= 0"));
        }
        let h = xi_max / n as f64;
        let xi: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let v = xi.iter().map(|&x| f(x)).collect();
        Ok(Self { xi, v, tau, eta })
    }

    pub fn spacing(&self) -> f64 {
        self.xi[1] - self.xi[0]
    }

    /// Trapezoid approximation of ∫ f g e^{−ξ²/4} dξ over the shared nodes.
    pub fn weighted_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let h = self.spacing();
        let m = f.len().min(g.len()).min(self.xi.len());
        (0..m)
            .map(|i| {
                let w = if i == 0 || i + 1 == m { 0.5 } else { 1.0 };
                w * h * f[i] * g[i] * (-0.25 * self.xi[i] * self.xi[i]).exp()
            })
            .sum()
    }

    /// u(x, t) = (−t)^{−1/2} V(x/√(−t)) for t < 0, by linear interpolation.
    pub fn physical_value(&self, x: f64, t: f64) -> f64 {
        let s = (-t).sqrt();
        let xi = x / s;
        let h = self.spacing();
        let k = ((xi / h).floor() as usize).min(self.xi.len() - 2);
        let w = (xi - self.xi[k]) / h;
        ((1.0 - w) * self.v[k] + w * self.v[k + 1]) / s
    }
}

#[derive(Debug, Clone)]
pub struct SimilarityConfig {
    pub dtau: f64,
    /// Record every `record_every` steps.
    pub record_every: usize,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self { dtau: 1e-3, record_every: 10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityRun {
    pub state: SimilarityState,
    /// (τ, V(0, τ), η)
    pub history: Vec<(f64, f64, f64)>,
}

// V_τ = V″ − ξV′/2 − V/2, ghost node at ξ = 0, upwind outflow at xi_max.
fn operator(xi: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = xi.len();
    let h = xi[1] - xi[0];
    let h2 = h * h;
    let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    diag[0] = -2.0 / h2 - 0.5;
    sup[0] = 2.0 / h2;
    for i in 1..n - 1 {
        let adv = 0.25 * xi[i] / h;
        sub[i] = 1.0 / h2 + adv;
        diag[i] = -2.0 / h2 - 0.5;
        sup[i] = 1.0 / h2 - adv;
    }
    let adv = 0.5 * xi[n - 1] / h;
    sub[n - 1] = adv;
    diag[n - 1] = -adv - 0.5;
    (sub, diag, sup)
}

// boundary slope V′(0) and its derivative in V(0)
fn slope(flux: Option<&FluxModel>, eta: f64, v0: f64) -> (f64, f64) {
    match flux {
        Some(g) if eta > 0.0 => (g.value(eta * v0) / (eta * eta), g.deriv(eta * v0) / eta),
        _ => (-v0 * v0, -2.0 * v0),
    }
}

/// Fixed point of the semi-discrete similarity flow without correction.
pub fn discrete_fixed_point(xi_max: f64, n: usize) -> Result<SimilarityState> {
    let mut st = SimilarityState::from_fn(xi_max, n, 0.0, 0.0, |_| 0.0)?;
    let (sub, diag, sup) = operator(&st.xi);
    let h = st.spacing();
    // A w = −e0, so V = s w with s = (2/h)V0²
    let lu = TridiagLu::new(&sub[1..], &diag, &sup[..sup.len() - 1]);
    let mut w = vec![0.0; st.xi.len()];
    w[0] = -1.0;
    lu.solve_in_place(&mut w);
    let v0 = h / (2.0 * w[0]);
    let s = 2.0 / h * v0 * v0;
    st.v = w.iter().map(|x| s * x).collect();
    Ok(st)
}

/// Crank–Nicolson in τ with the boundary value found by scalar Newton.
/// With `flux = None` (or η = 0) the boundary law is V′ = −V²; otherwise it
/// is V′ = g(ηV)/η² with η = η0 e^{(τ−τ0)/2}.
pub fn similarity_evolve(
    state: &SimilarityState,
    flux: Option<&FluxModel>,
    tau_end: f64,
    cfg: &SimilarityConfig,
) -> Result<SimilarityRun> {
    if !(cfg.dtau > 0.0) || !(tau_end >= state.tau) {
        return Err(Error::input("need dtau > 0 and tau_end >= tau"));
    }
    let (sub, diag, sup) = operator(&state.xi);
    let n = state.xi.len();
    let h = state.spacing();
    let gain = 2.0 / h;
    let (tau0, eta0) = (state.tau, state.eta);
    let eta_at = |tau: f64| eta0 * (0.5 * (tau - tau0)).exp();

    let build = |a: f64, theta: f64| {
        let d: Vec<f64> = diag.iter().map(|x| 1.0 - a * theta * x).collect();
        let lo: Vec<f64> = sub[1..].iter().map(|x| -a * theta * x).collect();
        let up: Vec<f64> = sup[..n - 1].iter().map(|x| -a * theta * x).collect();
        let lu = TridiagLu::new(&lo, &d, &up);
        let mut q = vec![0.0; n];
        q[0] = 1.0;
        lu.solve_in_place(&mut q);
        (lu, q)
    };

    let steps = ((tau_end - tau0) / cfg.dtau).ceil().max(0.0) as usize;
    let dt = if steps > 0 { (tau_end - tau0) / steps as f64 } else { 0.0 };
    // four backward Euler quarter steps, then Crank–Nicolson
    let be = build(0.25 * dt, 1.0);
    let cn = build(dt, 0.5);
    let mut v = state.v.clone();
    let mut tau = tau0;
    let mut history = vec![(tau, v[0], eta_at(tau))];
    let mut av = vec![0.0; n];
    let mut pending = 4usize;
    let mut k = 0usize;
    while k < steps {
        let (theta, sub_dt, (lu, q)) = if pending > 0 { (1.0, 0.25 * dt, &be) } else { (0.5, dt, &cn) };
        let tnew = tau + sub_dt;
        let mut rhs = v.clone();
        if theta < 1.0 {
            tridiag_mul(&sub[1..], &diag, &sup[..n - 1], &v, &mut av);
            let (b_old, _) = slope(flux, eta_at(tau), v[0]);
            for i in 0..n {
                rhs[i] += sub_dt * (1.0 - theta) * av[i];
            }
            rhs[0] -= sub_dt * (1.0 - theta) * gain * b_old;
        }
        lu.solve_in_place(&mut rhs);
        let eta = eta_at(tnew);
        let c = sub_dt * theta * gain;
        // V0 = p0 + s q0 with s = −c b(V0)
        let mut s = 0.0;
        let mut ok = false;
        for _ in 0..60 {
            let v0 = rhs[0] + s * q[0];
            let (b, db) = slope(flux, eta, v0);
            let f = s + c * b;
            let df = 1.0 + c * db * q[0];
            let ds = f / df;
            s -= ds;
            if ds.abs() <= 1e-15 * (1.0 + s.abs()) {
                ok = true;
                break;
            }
        }
        if !ok || !s.is_finite() {
            // V′ = −V² has no implicit solution once V(0) is too large for the step
            return Err(Error::Range(format!("similarity state blew up near tau = {tnew} (V(0) = {:.3e})", v[0])));
        }
        for i in 0..n {
            v[i] = rhs[i] + s * q[i];
        }
        tau = tnew;
        if pending > 0 {
            pending -= 1;
            if pending == 0 {
                k += 1;
            }
        } else {
            k += 1;
        }
        if pending == 0 && (k.is_multiple_of(cfg.record_every.max(1)) || k == steps) {
            history.push((tau, v[0], eta_at(tau)));
        }
        if !v[0].is_finite() {
            return Err(Error::Range(format!("similarity state blew up at tau = {tau}")));
        }
    }
    Ok(SimilarityRun { state: SimilarityState { xi: state.xi.clone(), v, tau, eta: eta_at(tau) }, history })
}

#[cfg(test)]
mod tests {
    use super::super::profile::v_star;
    use super::super::spectrum::unstable_eigenfunction;
    use super::*;

    #[test]
    fn discrete_fixed_point_is_close_to_profile() {
        let st = discrete_fixed_point(20.0, 2000).unwrap();
        assert!((st.v[0] - v_star(0.0)).abs() < 1e-4, "{}", st.v[0]);
        let run = similarity_evolve(&st, None, 5.0, &SimilarityConfig::default()).unwrap();
        let drift = run.state.v.iter().zip(&st.v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(drift < 1e-8, "{drift}");
    }

    #[test]
    fn eta_follows_its_exponential() {
        let st = SimilarityState::from_fn(20.0, 400, 0.0, 1e-3, v_star).unwrap();
        let g = FluxModel::shifted(FluxModel::cosine(2.0), -3.0);
        let run = similarity_evolve(&st, Some(&g), 2.0, &SimilarityConfig::default()).unwrap();
        for &(tau, _, eta) in &run.history {
            assert!((eta / (1e-3 * (0.5 * tau).exp()) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn larger_start_leaves_along_the_unstable_mode() {
        let (xi_max, n) = (20.0, 1000);
        let fix = discrete_fixed_point(xi_max, n).unwrap();
        let (_, phi, _) = unstable_eigenfunction(xi_max, n).unwrap();
        let mut st = fix.clone();
        st.v.iter_mut().for_each(|x| *x *= 1.2);
        let proj = |s: &SimilarityState| {
            let d: Vec<f64> = s.v.iter().zip(&fix.v).map(|(a, b)| a - b).collect();
            st.weighted_inner(&d, &phi) / st.weighted_inner(&phi, &phi)
        };
        let early = similarity_evolve(&st, None, 0.05, &SimilarityConfig::default()).unwrap();
        let rate = (proj(&early.state) / proj(&st)).ln() / 0.05;
        // quadratic boundary law makes the growth faster than linear
        assert!(rate > 1.0 && rate < 1.5, "{rate}");
        let err = similarity_evolve(&st, None, 3.0, &SimilarityConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn perturbation_grows_along_the_unstable_mode() {
        let (xi_max, n) = (20.0, 1000);
        let fix = discrete_fixed_point(xi_max, n).unwrap();
        let (_, phi, _) = unstable_eigenfunction(xi_max, n).unwrap();
        let mut st = fix.clone();
        st.v.iter_mut().for_each(|x| *x *= 1.001);
        let proj = |s: &SimilarityState| {
            let d: Vec<f64> = s.v.iter().zip(&fix.v).map(|(a, b)| a - b).collect();
            st.weighted_inner(&d, &phi) / st.weighted_inner(&phi, &phi)
        };
        let a = similarity_evolve(&st, None, 1.0, &SimilarityConfig::default()).unwrap();
        let b = similarity_evolve(&a.state, None, 3.0, &SimilarityConfig::default()).unwrap();
        let rate = (proj(&b.state) / proj(&a.state)).ln() / 2.0;
        assert!((rate - 1.0).abs() < 0.1, "{rate}");
    }
}
