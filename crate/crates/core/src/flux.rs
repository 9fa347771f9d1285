//! Boundary flux models g(u), 2π-periodic in u.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_cyclic_constant;

pub const GAUGE: f64 = TAU;

/// Minimum number of samples accepted for a tabulated flux.
pub const MIN_TABLE_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    deny_unknown_fields,
    try_from = "RawFlux"
)]
pub enum FluxModel {
    /// g(u) = 1 + theta cos u
    Cosine { theta: f64 },
    /// Periodic cubic interpolant through equispaced samples on [0, 2π).
    Table {
        samples: Vec<f64>,
        #[serde(skip)]
        curvature: Vec<f64>,
    },
    /// g(u) = base(u) + offset
    AffineShift { base: Box<FluxModel>, offset: f64 },
}

impl FluxModel {
    pub fn cosine(theta: f64) -> Self {
        FluxModel::Cosine { theta }
    }

    pub fn constant(value: f64) -> Self {
        FluxModel::AffineShift { base: Box::new(FluxModel::cosine(0.0)), offset: value - 1.0 }
    }

    pub fn shifted(base: FluxModel, offset: f64) -> Self {
        FluxModel::AffineShift { base: Box::new(base), offset }
    }

    /// Tabulated flux from samples at u_j = 2πj/n.
    pub fn table(samples: Vec<f64>) -> Result<Self> {
        let mut f = FluxModel::Table { samples, curvature: Vec::new() };
        f.prepare()?;
        Ok(f)
    }

    /// Samples `f` on `n` equispaced points and builds a table flux.
    pub fn tabulate(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = GAUGE / n as f64;
        Self::table((0..n).map(|j| f(j as f64 * h)).collect())
    }

    /// Validates parameters and computes interpolation data.
    pub fn prepare(&mut self) -> Result<()> {
        match self {
            FluxModel::Cosine { theta } => {
                if !theta.is_finite() {
                    return Err(Error::input("cosine flux: theta must be finite"));
                }
            }
            FluxModel::Table { samples, curvature } => {
                if samples.len() < MIN_TABLE_SAMPLES {
                    return Err(Error::input(format!(
                        "table flux needs at least {MIN_TABLE_SAMPLES} samples, got {}",
                        samples.len()
                    )));
                }
                if samples.iter().any(|s| !s.is_finite()) {
                    return Err(Error::input("table flux: non-finite sample"));
                }
                *curvature = spline_curvature(samples);
            }
            FluxModel::AffineShift { base, offset } => {
                if !offset.is_finite() {
                    return Err(Error::input("affine-shift flux: offset must be finite"));
                }
                base.prepare()?;
            }
        }
        Ok(())
    }

    /// g(u). Callers must pass finite u; see [`FluxModel::eval`].
    pub fn value(&self, u: f64) -> f64 {
        match self {
            FluxModel::Cosine { theta } => 1.0 + theta * u.cos(),
            FluxModel::Table { samples, curvature } => spline_eval(samples, curvature, u).0,
            FluxModel::AffineShift { base, offset } => base.value(u) + offset,
        }
    }

    /// g'(u).
    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            FluxModel::Cosine { theta } => -theta * u.sin(),
            FluxModel::Table { samples, curvature } => spline_eval(samples, curvature, u).1,
            FluxModel::AffineShift { base, .. } => base.deriv(u),
        }
    }

    /// g''(u).
    pub fn deriv2(&self, u: f64) -> f64 {
        match self {
            FluxModel::Cosine { theta } => -theta * u.cos(),
            FluxModel::Table { samples, curvature } => spline_eval(samples, curvature, u).2,
            FluxModel::AffineShift { base, .. } => base.deriv2(u),
        }
    }

    /// Checked g(u).
    pub fn eval(&self, u: f64) -> Result<f64> {
        check_finite(u)?;
        Ok(self.value(u))
    }

    /// Checked g'(u).
    pub fn eval_deriv(&self, u: f64) -> Result<f64> {
        check_finite(u)?;
        Ok(self.deriv(u))
    }

    /// Cosine parameter, if this is a cosine flux without shift.
    pub fn theta(&self) -> Option<f64> {
        match self {
            FluxModel::Cosine { theta } => Some(*theta),
            _ => None,
        }
    }

    /// Sampled min and max of g over one gauge period.
    pub fn range(&self) -> (f64, f64) {
        if let Some(theta) = self.theta() {
            return (1.0 - theta.abs(), 1.0 + theta.abs());
        }
        let n = 4096;
        (0..n).map(|j| self.value(GAUGE * j as f64 / n as f64)).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
    }

    /// Sampled sup |g'|.
    pub fn lipschitz(&self) -> f64 {
        if let Some(theta) = self.theta() {
            return theta.abs();
        }
        let n = 4096;
        (0..n).map(|j| self.deriv(GAUGE * j as f64 / n as f64).abs()).fold(0.0, f64::max)
    }

    /// Whether a table flux obeys the normalization max h = 1, min h = -1
    /// at u = π for g = 1 + ϑh. Other kinds are trivially normalized.
    pub fn normalization_warning(&self) -> Option<String> {
        let FluxModel::Table { .. } = self else { return None };
        let (lo, hi) = self.range();
        let mid = 0.5 * (lo + hi);
        let amp = 0.5 * (hi - lo);
        let at_pi = self.value(PI);
        if (mid - 1.0).abs() > 1e-6 || (at_pi - lo).abs() > 1e-6 * amp.max(1.0) {
            Some(format!(
                "table flux is not of the form 1 + theta*h with min h = -1 at u = pi \
                 (range [{lo:.6}, {hi:.6}], g(pi) = {at_pi:.6})"
            ))
        } else {
            None
        }
    }
}

/// Wire form of [`FluxModel`]; converted through `prepare` on load.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawFlux {
    Cosine { theta: f64 },
    Table { samples: Vec<f64> },
    AffineShift { base: Box<RawFlux>, offset: f64 },
}

impl RawFlux {
    fn into_model(self) -> FluxModel {
        match self {
            RawFlux::Cosine { theta } => FluxModel::Cosine { theta },
            RawFlux::Table { samples } => FluxModel::Table { samples, curvature: Vec::new() },
            RawFlux::AffineShift { base, offset } => {
                FluxModel::AffineShift { base: Box::new(base.into_model()), offset }
            }
        }
    }
}

impl TryFrom<RawFlux> for FluxModel {
    type Error = Error;

    fn try_from(raw: RawFlux) -> Result<Self> {
        let mut f = raw.into_model();
        f.prepare()?;
        Ok(f)
    }
}

fn check_finite(u: f64) -> Result<()> {
    if u.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("flux argument must be finite, got {u}")))
    }
}

fn spline_curvature(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let h = GAUGE / n as f64;
    let rhs: Vec<f64> = (0..n)
        .map(|j| {
            let prev = samples[(j + n - 1) % n];
            let next = samples[(j + 1) % n];
            6.0 * (next - 2.0 * samples[j] + prev) / (h * h)
        })
        .collect();
    solve_cyclic_constant(1.0, 4.0, &rhs)
}

fn spline_eval(samples: &[f64], m: &[f64], u: f64) -> (f64, f64, f64) {
    let n = samples.len();
    let h = GAUGE / n as f64;
    let w = u.rem_euclid(GAUGE);
    let j = ((w / h).floor() as usize).min(n - 1);
    let t = w - j as f64 * h;
    let s = h - t;
    let (y0, y1) = (samples[j], samples[(j + 1) % n]);
    let (m0, m1) = (m[j], m[(j + 1) % n]);
    let a = y0 / h - m0 * h / 6.0;
    let b = y1 / h - m1 * h / 6.0;
    let v = m0 * s.powi(3) / (6.0 * h) + m1 * t.powi(3) / (6.0 * h) + a * s + b * t;
    let d = -m0 * s * s / (2.0 * h) + m1 * t * t / (2.0 * h) - a + b;
    let d2 = (m0 * s + m1 * t) / h;
    (v, d, d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_values() {
        let f = FluxModel::cosine(0.5);
        assert!((f.eval(PI).unwrap() - 0.5).abs() < 1e-15);
        assert!((f.eval(TAU + PI / 3.0).unwrap() - 1.25).abs() < 1e-14);
        let g = FluxModel::cosine(0.0);
        for u in [-3.0, 0.0, 1.7, 100.0] {
            assert_eq!(g.eval(u).unwrap(), 1.0);
        }
        assert!(f.eval(f64::NAN).is_err());
        assert!(f.eval(f64::INFINITY).is_err());
    }

    #[test]
    fn cosine_minimum_at_pi() {
        let f = FluxModel::cosine(0.7);
        let (lo, hi) = f.range();
        assert!((lo - 0.3).abs() < 1e-15 && (hi - 1.7).abs() < 1e-15);
        assert!((f.value(PI) - lo).abs() < 1e-15);
    }

    #[test]
    fn table_too_small_rejected() {
        assert!(FluxModel::table(vec![1.0; 7]).is_err());
        assert!(FluxModel::table(vec![1.0; 8]).is_ok());
    }

    #[test]
    fn table_reproduces_cosine() {
        let t = FluxModel::tabulate(256, |u| 1.0 + 0.5 * u.cos()).unwrap();
        let c = FluxModel::cosine(0.5);
        for j in 0..500 {
            let u = -7.0 + 0.029 * j as f64;
            assert!((t.value(u) - c.value(u)).abs() < 1e-7);
            assert!((t.deriv(u) - c.deriv(u)).abs() < 1e-5);
            assert!((t.deriv2(u) - c.deriv2(u)).abs() < 2e-3);
        }
        assert!(t.normalization_warning().is_none());
        let bad = FluxModel::tabulate(64, |u| 2.0 + u.sin()).unwrap();
        assert!(bad.normalization_warning().is_some());
    }

    #[test]
    fn json_roundtrip() {
        let f: FluxModel = serde_json::from_str(r#"{"kind":"cosine","theta":0.5}"#).unwrap();
        assert_eq!(f, FluxModel::cosine(0.5));
        let t: FluxModel =
            serde_json::from_str(r#"{"kind":"table","samples":[0,0,0,0,0,0,0,0]}"#).unwrap();
        assert_eq!(t.value(1.0), 0.0);
        let s: FluxModel = serde_json::from_str(
            r#"{"kind":"affine-shift","base":{"kind":"cosine","theta":1},"offset":-2}"#,
        )
        .unwrap();
        assert!((s.value(0.0)).abs() < 1e-15);
        assert!(serde_json::from_str::<FluxModel>(r#"{"kind":"cosine","theta":1,"x":2}"#).is_err());
        assert!(serde_json::from_str::<FluxModel>(r#"{"kind":"table","samples":[1,2]}"#).is_err());
        let back: FluxModel = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    fn lattice_flux() -> impl Strategy<Value = FluxModel> {
        prop_oneof![
            (-2.0..2.0f64).prop_map(FluxModel::cosine),
            prop::collection::vec(-2.0..2.0f64, 8..40).prop_map(|s| FluxModel::table(s).unwrap()),
            ((-1.5..1.5f64), (-3.0..3.0f64))
                .prop_map(|(t, o)| FluxModel::shifted(FluxModel::cosine(t), o)),
        ]
    }

    proptest! {
        #[test]
        fn gauge_periodic(f in lattice_flux(), u in -20.0..20.0f64) {
            let tol = if matches!(f, FluxModel::Table { .. }) { 1e-11 } else { 1e-14 };
            prop_assert!((f.value(u + TAU) - f.value(u)).abs() < tol * (1.0 + f.value(u).abs()));
        }

        #[test]
        fn derivatives_match_differences(f in lattice_flux(), u in -6.0..6.0f64) {
            let h = 1e-4;
            let fd1 = (f.value(u + h) - f.value(u - h)) / (2.0 * h);
            let fd2 = (f.deriv(u + h) - f.deriv(u - h)) / (2.0 * h);
            // tables are C² only, so g'' may jump at knots
            let scale = 1.0 + f.deriv2(u).abs() + f.lipschitz();
            prop_assert!((fd1 - f.deriv(u)).abs() < 1e-6 * scale);
            if !matches!(f, FluxModel::Table { .. }) {
                prop_assert!((fd2 - f.deriv2(u)).abs() < 1e-6 * scale);
            }
        }
    }
}
