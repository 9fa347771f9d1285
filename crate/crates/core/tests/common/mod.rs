//! Randomized solution-level checks shared by the property suite and the
//! acceptance harness.

#![allow(dead_code)]

use std::sync::Arc;

use halfline::evolve::{check_comparison, evolve, evolve_volterra, zero_history, EvolveConfig, VolterraConfig};
use halfline::{Field, Grid1D, Params, Stretching};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct Flow {
    pub c: f64,
    pub theta: f64,
}

impl Flow {
    pub fn params(&self) -> Params {
        Params::cosine(self.c, self.theta).unwrap()
    }
}

pub fn flows() -> impl Strategy<Value = Flow> {
    (0.0..2.0f64, 0.0..0.9f64).prop_map(|(c, theta)| Flow { c, theta })
}

fn grid(length: f64, n: usize, beta: f64) -> Arc<Grid1D> {
    Arc::new(Grid1D::new(length, n, Stretching::TanhClustered { beta }).unwrap())
}

/// u0 = a + b tanh(x/ℓ) and a nonnegative Gaussian bump added on top.
#[derive(Debug, Clone, Copy)]
pub struct OrderedPair {
    pub flow: Flow,
    pub a: f64,
    pub b: f64,
    pub ell: f64,
    pub bump: f64,
    pub centre: f64,
}

pub fn ordered_pairs() -> impl Strategy<Value = OrderedPair> {
    (flows(), -3.0..3.0f64, -2.0..2.0f64, 0.5..3.0f64, 0.0..1.5f64, 0.0..6.0f64)
        .prop_map(|(flow, a, b, ell, bump, centre)| OrderedPair { flow, a, b, ell, bump, centre })
}

/// Largest value of lower − upper over the stored snapshots.
pub fn ordering_violation(p: &OrderedPair) -> f64 {
    let g = grid(30.0, 300, 2.0);
    let lower = Field::from_fn(g.clone(), |x| p.a + p.b * (x / p.ell).tanh()).unwrap();
    let upper = Field::from_fn(g, |x| {
        p.a + p.b * (x / p.ell).tanh() + p.bump * (-(x - p.centre).powi(2)).exp()
    })
    .unwrap();
    let cfg = EvolveConfig::new(1e-2, 2.0).with_snapshots(5);
    let params = p.flow.params();
    let lo = evolve(&params, &lower, &cfg).unwrap();
    let hi = evolve(&params, &upper, &cfg).unwrap();
    check_comparison(&lo, &hi, 0.0).unwrap().max_violation
}

/// Two solutions whose initial difference is ε sin(κx + φ) e^{−x²/8}.
#[derive(Debug, Clone, Copy)]
pub struct CrossingPair {
    pub flow: Flow,
    pub a: f64,
    pub eps: f64,
    pub kappa: f64,
    pub phase: f64,
}

pub fn crossing_pairs() -> impl Strategy<Value = CrossingPair> {
    (flows(), -3.0..3.0f64, 0.05..0.5f64, 0.5..3.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(flow, a, eps, kappa, phase)| CrossingPair { flow, a, eps, kappa, phase })
}

/// Zero counts of the difference at the stored times, degenerate samples
/// dropped.
pub fn zero_counts(p: &CrossingPair) -> Vec<usize> {
    let g = grid(30.0, 400, 2.0);
    let k = p.flow.params().flux.value(p.a);
    let base = |x: f64| p.a + k * x;
    let u = Field::from_fn(g.clone(), base).unwrap();
    let v = Field::from_fn(g, |x| base(x) + p.eps * (p.kappa * x + p.phase).sin() * (-x * x / 8.0).exp()).unwrap();
    let cfg = EvolveConfig::new(5e-3, 1.0).with_snapshots(4);
    let params = p.flow.params();
    let a = evolve(&params, &u, &cfg).unwrap();
    let b = evolve(&params, &v, &cfg).unwrap();
    zero_history(&a, &b).unwrap().into_iter().filter_map(|z| z.count).collect()
}

/// Largest |v − u − 2π| between the solutions from u0 and u0 + 2π.
pub fn gauge_defect(flow: Flow, a: f64, b: f64) -> f64 {
    let g = grid(30.0, 300, 2.0);
    let u0 = Field::from_fn(g.clone(), |x| a + b * x.sin() * (-x).exp()).unwrap();
    let v0 = Field::from_fn(g, |x| a + b * x.sin() * (-x).exp() + std::f64::consts::TAU).unwrap();
    let cfg = EvolveConfig::new(1e-2, 2.0).with_snapshots(10);
    let params = flow.params();
    let u = evolve(&params, &u0, &cfg).unwrap();
    let v = evolve(&params, &v0, &cfg).unwrap();
    u.snapshots
        .iter()
        .zip(&v.snapshots)
        .flat_map(|((_, fu), (_, fv))| {
            fu.values().iter().zip(fv.values()).map(|(x, y)| (y - x - std::f64::consts::TAU).abs()).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Smooth data compatible with the boundary condition at t = 0:
/// u0 = a + g(a) ℓ (1 − e^{−x/ℓ}).
#[derive(Debug, Clone, Copy)]
pub struct SmoothCase {
    pub flow: Flow,
    pub a: f64,
    pub ell: f64,
}

pub fn smooth_cases() -> impl Strategy<Value = SmoothCase> {
    (flows(), -3.0..3.0f64, 0.5..2.0f64).prop_map(|(flow, a, ell)| SmoothCase { flow, a, ell })
}

/// Largest gap between the finite-difference and boundary-integral traces
/// of u(0, t) on [0, 1].
pub fn volterra_gap(s: &SmoothCase) -> f64 {
    let params = s.flow.params();
    let slope = params.flux.value(s.a);
    let g = grid(25.0, 1600, 3.0);
    let u0 = Field::from_fn(g, |x| s.a + slope * s.ell * (1.0 - (-x / s.ell).exp())).unwrap();
    let dt = 2.5e-4;
    let fd = evolve(&params, &u0, &EvolveConfig::new(dt, 1.0)).unwrap();
    let vt = evolve_volterra(&params, &u0, 1.0, &VolterraConfig::new(dt)).unwrap();
    fd.boundary_trace
        .iter()
        .filter_map(|p| vt.boundary_at(p.t).map(|v| (v - p.u).abs()))
        .fold(0.0, f64::max)
}
