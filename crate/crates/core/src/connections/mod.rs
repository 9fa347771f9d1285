//! Entire solutions joining consecutive zeros of the flux, the saddle-node
//! limit of the orbit branch, super-solution ladders and the spectrum of
//! the linearization at a constant state.

mod hetero;
mod snic;
mod spectrum;
mod supersol;

pub use hetero::{
    compute_heteroclinic, translate_distance, ConnectionConfig, ConnectionRates, ConnectionRecord, ForwardSample,
    Window,
};
pub use snic::{snic_scan, SnicConfig, SnicReport, SnicRow};
pub use spectrum::{a0_spectrum, discrete_a0_top, A0Spectrum};
pub use supersol::{ladder_rates, pde_crossing_time};
pub use supersol::{
    default_epsilon, evolve_supersolution, supersol_ladder, supersol_trace, supersol_trace_quadrature, LadderRow,
    SupersolLadder, TraceVariant,
};

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::FluxModel;

pub const ROOT_TOL: f64 = 1e-12;
const SCAN_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignBetween {
    Positive,
    Negative,
}

/// Two consecutive zeros y1 < y2 of g (y2 may be a gauge copy of a zero
/// below y1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroPair {
    pub y1: f64,
    pub y2: f64,
    pub sign_between: SignBetween,
    pub gprime_y1: f64,
    pub gprime_y2: f64,
    /// Either endpoint is a multiple zero.
    pub degenerate: bool,
}

impl ZeroPair {
    /// (backward limit, forward limit) of the connection inside the pair.
    pub fn orientation(&self) -> (f64, f64) {
        match self.sign_between {
            SignBetween::Positive => (self.y2, self.y1),
            SignBetween::Negative => (self.y1, self.y2),
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.y1 + self.y2)
    }

    pub fn width(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self { y1: self.y1 + by, y2: self.y2 + by, ..*self }
    }
}

fn bisect(f: &FluxModel, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f.value(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f.value(m);
        if fm == 0.0 || b - a < ROOT_TOL {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Critical point of g in [a, b] by bisection on g′.
fn critical_point(f: &FluxModel, mut a: f64, mut b: f64) -> Option<f64> {
    let (da, db) = (f.deriv(a), f.deriv(b));
    if (da > 0.0) == (db > 0.0) && da != 0.0 && db != 0.0 {
        return None;
    }
    let pos_a = da > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a < ROOT_TOL {
            break;
        }
        if (f.deriv(m) > 0.0) == pos_a {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Zeros of g on [0, 2π), simple ones by bracketing and double ones as
/// critical points where |g| vanishes.
pub fn find_zeros(f: &FluxModel) -> Result<Vec<f64>> {
    let h = TAU / SCAN_POINTS as f64;
    let us: Vec<f64> = (0..=SCAN_POINTS).map(|i| i as f64 * h).collect();
    let gs: Vec<f64> = us.iter().map(|&u| f.value(u)).collect();
    let scale = gs.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if scale == 0.0 || gs.windows(3).any(|w| w.iter().all(|g| g.abs() <= 1e-14 * scale.max(1.0))) {
        return Err(Error::Domain("flux vanishes on a whole interval; zeros are not isolated".into()));
    }
    let mut zeros = Vec::new();
    for i in 0..SCAN_POINTS {
        let (a, b) = (us[i], us[i + 1]);
        let (ga, gb) = (gs[i], gs[i + 1]);
        if ga == 0.0 {
            zeros.push(a);
        } else if gb != 0.0 && (ga > 0.0) != (gb > 0.0) {
            zeros.push(bisect(f, a, b));
        }
    }
    // touching zeros: local minima of |g| without a sign change
    for i in 1..SCAN_POINTS {
        let (gl, gm, gr) = (gs[i - 1].abs(), gs[i].abs(), gs[i + 1].abs());
        if gm <= gl && gm <= gr && gs[i - 1] * gs[i + 1] > 0.0 && gs[i] * gs[i - 1] > 0.0 {
            if let Some(u) = critical_point(f, us[i - 1], us[i + 1]) {
                if f.value(u).abs() <= 1e-10 * scale.max(1.0) {
                    zeros.push(u);
                }
            }
        }
    }
    zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if zeros.len() > 1 && (zeros[0] + TAU - zeros[zeros.len() - 1]).abs() < 1e-9 {
        zeros.pop();
    }
    Ok(zeros)
}

/// Consecutive zero pairs over one gauge period; the last pair wraps to the
/// first zero plus 2π.
pub fn find_zero_pairs(f: &FluxModel) -> Result<Vec<ZeroPair>> {
    let zeros = find_zeros(f)?;
    let m = zeros.len();
    let mut pairs = Vec::with_capacity(m);
    for i in 0..m {
        let y1 = zeros[i];
        let y2 = if i + 1 < m { zeros[i + 1] } else { zeros[0] + TAU };
        let mid = f.value(0.5 * (y1 + y2));
        let sign_between = if mid > 0.0 { SignBetween::Positive } else { SignBetween::Negative };
        let (d1, d2) = (f.deriv(y1), f.deriv(y2));
        let degenerate = d1.abs() < 1e-7 || d2.abs() < 1e-7;
        pairs.push(ZeroPair { y1, y2, sign_between, gprime_y1: d1, gprime_y2: d2, degenerate });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mirror_pair_for_theta_above_one() {
        let pairs = find_zero_pairs(&FluxModel::cosine(1.5)).unwrap();
        assert_eq!(pairs.len(), 2);
        // oracle: bisection on 1 + 1.5 cos u written out by hand
        let g = |u: f64| 1.0 + 1.5 * u.cos();
        let (mut a, mut b) = (2.0, 2.6);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if g(a) * g(m) <= 0.0 {
                b = m
            } else {
                a = m
            }
        }
        assert!((pairs[0].y1 - a).abs() < 1e-11);
        assert!((pairs[0].y1 - 2.30052).abs() < 1e-5);
        assert!((pairs[0].y2 - 3.98266).abs() < 1e-5);
        assert!((pairs[0].y1 + pairs[0].y2 - TAU).abs() < 1e-11);
        assert_eq!(pairs[0].sign_between, SignBetween::Negative);
        assert_eq!(pairs[1].sign_between, SignBetween::Positive);
        assert!(!pairs[0].degenerate);
    }

    #[test]
    fn double_zero_at_theta_one() {
        let pairs = find_zero_pairs(&FluxModel::cosine(1.0)).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!((pairs[0].y1 - PI).abs() < 1e-6);
        assert!((pairs[0].y2 - 3.0 * PI).abs() < 1e-6);
        assert!(pairs[0].degenerate);
        assert_eq!(pairs[0].orientation().0, pairs[0].y2);
    }

    #[test]
    fn no_zeros_for_unit_flux() {
        assert!(find_zero_pairs(&FluxModel::constant(1.0)).unwrap().is_empty());
        assert!(find_zero_pairs(&FluxModel::cosine(0.5)).unwrap().is_empty());
    }

    #[test]
    fn vanishing_flux_is_reported() {
        assert!(find_zero_pairs(&FluxModel::table(vec![0.0; 16]).unwrap()).is_err());
    }
}
