//! Ordering and sign-change diagnostics on trajectories.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;

use super::Trajectory;

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub holds: bool,
    /// Largest value of lower − upper over all stored samples.
    pub max_violation: f64,
    /// (t, x) of the first sample where lower > upper + tol.
    pub first_violation: Option<(f64, f64)>,
    /// Smallest gap upper − lower seen.
    pub min_gap: f64,
    pub tol: f64,
}

/// Checks lower ≤ upper + tol at every stored time common to both.
pub fn check_comparison(lower: &Trajectory, upper: &Trajectory, tol: f64) -> Result<ComparisonReport> {
    if lower.snapshots.len() != upper.snapshots.len() {
        return Err(Error::input("trajectories store different numbers of snapshots"));
    }
    let mut report =
        ComparisonReport { holds: true, max_violation: f64::NEG_INFINITY, first_violation: None, min_gap: f64::INFINITY, tol };
    for ((tl, fl), (tu, fu)) in lower.snapshots.iter().zip(&upper.snapshots) {
        if (tl - tu).abs() > 1e-9 * (1.0 + tl.abs()) {
            return Err(Error::input(format!("snapshot times differ: {tl} vs {tu}")));
        }
        if fl.grid() != fu.grid() && fl.grid().nodes() != fu.grid().nodes() {
            return Err(Error::input("trajectories live on different grids"));
        }
        for ((&x, &a), &b) in fl.grid().nodes().iter().zip(fl.values()).zip(fu.values()) {
            let d = a - b;
            report.max_violation = report.max_violation.max(d);
            report.min_gap = report.min_gap.min(-d);
            if d > tol && report.first_violation.is_none() {
                report.holds = false;
                report.first_violation = Some((*tl, x));
            }
        }
    }
    Ok(report)
}

/// Number of sign changes of a sampled function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroCount {
    pub t: f64,
    /// `None` when the function vanishes identically at the tolerance.
    pub count: Option<usize>,
    /// False when some near-zero run does not separate opposite signs.
    pub simple: bool,
}

impl ZeroCount {
    pub fn is_degenerate(&self) -> bool {
        self.count.is_none()
    }
}

/// Zero count with the default tolerance 1e−9·‖v‖∞.
pub fn zero_count(v: &Field, t: f64) -> ZeroCount {
    zero_count_with_tol(v.values(), t, 1e-9 * v.max_abs())
}

pub fn zero_count_with_tol(v: &[f64], t: f64, tol: f64) -> ZeroCount {
    let scale = crate::linalg::norm_inf(v);
    if scale == 0.0 || scale <= tol {
        return ZeroCount { t, count: None, simple: false };
    }
    let mut count = 0;
    let mut simple = true;
    let mut last_sign = 0i8;
    let mut in_small_run = false;
    for &x in v {
        if x.abs() <= tol {
            in_small_run = true;
            continue;
        }
        let s = if x > 0.0 { 1 } else { -1 };
        if last_sign != 0 {
            if s != last_sign {
                count += 1;
            } else if in_small_run {
                // touches zero without crossing: suspected multiple zero
                simple = false;
            }
        }
        in_small_run = false;
        last_sign = s;
    }
    ZeroCount { t, count: Some(count), simple }
}

/// Zero counts of a − b at each common snapshot time.
pub fn zero_history(a: &Trajectory, b: &Trajectory) -> Result<Vec<ZeroCount>> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::input("trajectories store different numbers of snapshots"));
    }
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|((ta, fa), (_, fb))| {
            if fa.values().len() != fb.values().len() {
                return Err(Error::input("trajectories live on different grids"));
            }
            let d: Vec<f64> = fa.values().iter().zip(fb.values()).map(|(x, y)| x - y).collect();
            let tol = 1e-9 * crate::linalg::norm_inf(&d);
            Ok(zero_count_with_tol(&d, *ta, tol))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use std::sync::Arc;

    #[test]
    fn counts() {
        let grid = Arc::new(Grid1D::uniform(2.0, 101).unwrap());
        let f = Field::from_fn(grid.clone(), |x| x - 1.0).unwrap();
        let z = zero_count(&f, 0.0);
        assert_eq!(z.count, Some(1));
        assert!(z.simple);
        let zero = Field::constant(grid.clone(), 0.0).unwrap();
        assert!(zero_count(&zero, 0.0).is_degenerate());
        let touch = Field::from_fn(grid, |x| (x - 1.0).powi(2)).unwrap();
        let z = zero_count(&touch, 0.0);
        assert_eq!(z.count, Some(0));
        assert!(!z.simple);
    }
}
