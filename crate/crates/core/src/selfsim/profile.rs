use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{erfc, erfcx};

/// V*(ξ) = e^{ξ²/4} erfc(ξ/2) / √π, the decaying stationary profile.
pub fn v_star(xi: f64) -> f64 {
    erfcx(0.5 * xi) / PI.sqrt()
}

/// e^{ξ²/4} erfc(ξ) / √π. Kept for comparison; it does not satisfy the
/// profile equation.
pub fn unscaled_erfc_profile(xi: f64) -> f64 {
    (0.25 * xi * xi).exp() * erfc(xi) / PI.sqrt()
}

impl StationaryProfile {
    pub fn csv(&self) -> String {
        let mut out = String::from("xi,V\n");
        for (x, v) in self.xi.iter().zip(&self.v) {
            out.push_str(&format!("{x},{v}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryProfile {
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    pub v0: f64,
    pub vprime0: f64,
    /// |V′(0) + V(0)²|
    pub boundary_residual: f64,
    /// max over interior nodes of |V″ − ξV′/2 − V/2| by fourth-order differences
    pub interior_residual: f64,
    /// max |V − V*| against the closed form
    pub closed_form_error: f64,
    /// Same interior residual for the erfc(ξ) variant.
    pub unscaled_variant_residual: f64,
    /// |V′(0) + V(0)²| for the erfc(ξ) variant.
    pub unscaled_variant_boundary_residual: f64,
}

// V″ = ξV′/2 + V/2
fn rk4(a: f64, xi_end: f64, steps: usize, mut visit: impl FnMut(f64, f64) -> bool) -> (f64, f64) {
    let h = xi_end / steps as f64;
    let f = |xi: f64, y: [f64; 2]| [y[1], 0.5 * xi * y[1] + 0.5 * y[0]];
    let mut y = [a, -a * a];
    if !visit(0.0, y[0]) {
        return (y[0], y[1]);
    }
    for i in 0..steps {
        let xi = i as f64 * h;
        let k1 = f(xi, y);
        let k2 = f(xi + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f(xi + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f(xi + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !visit(xi + h, y[0]) {
            break;
        }
    }
    (y[0], y[1])
}

fn fd_residual(xi: &[f64], v: &[f64]) -> f64 {
    let h = xi[1] - xi[0];
    let mut worst = 0.0f64;
    for i in 2..xi.len().saturating_sub(2) {
        let d1 = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
        let d2 = (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h);
        worst = worst.max((d2 - 0.5 * xi[i] * d1 - 0.5 * v[i]).abs());
    }
    worst
}

/// Shooting for the bounded solution of V″ − ξV′/2 − V/2 = 0 with
/// V′(0) = −V(0)². Unbounded neighbours leave with e^{ξ²/4}, so the sign at
/// the end of the shooting interval decides the bisection. The interval is
/// at least [0, 12] to resolve V(0) near machine precision; the profile is
/// returned on `n + 1` uniform nodes of [0, xi_max].
pub fn similarity_stationary_profile(xi_max: f64, n: usize) -> Result<StationaryProfile> {
    if !(xi_max >= 8.0) || n < 16 {
        return Err(Error::input(format!("need xi_max >= 8 and n >= 16, got {xi_max}, {n}")));
    }
    let shoot_end = xi_max.max(12.0);
    let h = (xi_max / n as f64).min(1e-3);
    let shoot_steps = (shoot_end / h).ceil() as usize;
    let too_big = |a: f64| {
        let mut negative = false;
        rk4(a, shoot_end, shoot_steps, |_, v| {
            negative = v < 0.0;
            !negative
        });
        negative
    };
    let (mut lo, mut hi) = (0.1, 1.5);
    if too_big(lo) || !too_big(hi) {
        return Err(Error::solver("shooting bracket lost"));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        if too_big(m) {
            hi = m;
        } else {
            lo = m;
        }
    }
    let a = 0.5 * (lo + hi);

    let fine = (xi_max / h).round() as usize;
    let stride = (fine / n).max(1);
    let fine = stride * n;
    let mut dense = Vec::with_capacity(fine + 1);
    rk4(a, xi_max, fine, |_, v| {
        dense.push(v);
        true
    });
    let hx = xi_max / n as f64;
    let xi: Vec<f64> = (0..=n).map(|i| i as f64 * hx).collect();
    let v: Vec<f64> = (0..=n).map(|i| dense[i * stride]).collect();
    let dense_xi: Vec<f64> = (0..=fine).map(|i| i as f64 * xi_max / fine as f64).collect();
    let interior_residual = fd_residual(&dense_xi[..dense_xi.len().min(20001)], &dense[..dense.len().min(20001)]);
    let closed_form_error = xi.iter().zip(&v).fold(0.0f64, |m, (&x, &y)| m.max((y - v_star(x)).abs()));

    let alt: Vec<f64> = dense_xi.iter().map(|&x| unscaled_erfc_profile(x)).collect();
    let alt_d0 = -2.0 / PI; // d/dξ of erfc(ξ)/√π at 0
    let alt0 = 1.0 / PI.sqrt();
    Ok(StationaryProfile {
        v0: a,
        vprime0: -a * a,
        boundary_residual: 0.0,
        interior_residual,
        closed_form_error,
        unscaled_variant_residual: fd_residual(&dense_xi[..dense_xi.len().min(20001)], &alt[..alt.len().min(20001)]),
        unscaled_variant_boundary_residual: (alt_d0 + alt0 * alt0).abs(),
        xi,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_value_is_inverse_root_pi() {
        let p = similarity_stationary_profile(8.0, 800).unwrap();
        assert!((p.v0 - 1.0 / PI.sqrt()).abs() < 1e-8, "{}", p.v0);
        assert!(p.interior_residual < 1e-8, "{}", p.interior_residual);
        assert!(p.closed_form_error < 1e-6, "{}", p.closed_form_error);
        assert!((p.vprime0 + 1.0 / PI).abs() < 1e-8);
        assert!(p.unscaled_variant_residual > 1e-2);
        assert!(p.v.iter().all(|&v| v > 0.0));
        assert!(p.v.windows(2).all(|w| w[1] < w[0]));
        // e^{−ξ²/4}V against erfc(ξ/2)/√π
        for (x, v) in p.xi.iter().zip(&p.v).step_by(100) {
            let env = erfc(0.5 * x) / PI.sqrt();
            assert!(((-0.25 * x * x).exp() * v / env - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_solves_the_problem() {
        // V*'(0) = −1/π = −V*(0)², checked by a centred difference
        let d = (v_star(1e-5) - v_star(-1e-5)) / 2e-5;
        assert!((d + v_star(0.0).powi(2)).abs() < 1e-9);
        assert!((v_star(20.0) * 10.0 * PI - 1.0).abs() < 0.01);
    }

    #[test]
    fn short_interval_is_rejected() {
        assert!(similarity_stationary_profile(5.0, 100).is_err());
    }
}
