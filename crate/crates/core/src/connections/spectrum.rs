use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::top_eigenvalues_symtridiag;

/// Spectrum of −A0 = ∂xx − c²/4 on the half-line with
/// φ′(0) = (g′(0) − c/2)φ(0), the weighted linearization at a zero of g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A0Spectrum {
    pub c: f64,
    pub gprime0: f64,
    /// −c²/4
    pub essential_edge: f64,
    /// g′(0)² − g′(0)c, present when the eigenfunction e^{−λc x} decays,
    /// that is when g′(0) < c/2.
    pub point_eigenvalue: Option<f64>,
    /// λc = c/2 − g′(0)
    pub eigenfunction_rate: Option<f64>,
    /// Value of the formula g′(0)² − g′(0)c whether or not it is an
    /// eigenvalue.
    pub formula_value: f64,
}

pub fn a0_spectrum(c: f64, gprime0: f64) -> Result<A0Spectrum> {
    if !(c >= 0.0) || !c.is_finite() || !gprime0.is_finite() {
        return Err(Error::input("c must be finite and >= 0, g'(0) finite"));
    }
    let rate = 0.5 * c - gprime0;
    let formula_value = gprime0 * gprime0 - gprime0 * c;
    let exists = rate > 0.0;
    Ok(A0Spectrum {
        c,
        gprime0,
        essential_edge: -0.25 * c * c,
        point_eigenvalue: exists.then_some(formula_value),
        eigenfunction_rate: exists.then_some(rate),
        formula_value,
    })
}

/// Largest eigenvalues of the finite-difference −A0 on [0, L] with a
/// Dirichlet end, symmetrized so that Sturm bisection applies.
pub fn discrete_a0_top(c: f64, gprime0: f64, length: f64, n: usize, count: usize) -> Result<Vec<f64>> {
    if n < 8 || !(length > 0.0) {
        return Err(Error::input("need at least 8 nodes and L > 0"));
    }
    let h = length / n as f64;
    let beta = gprime0 - 0.5 * c;
    let shift = -0.25 * c * c;
    // unknowns φ_0 .. φ_{n−1}; φ_n = 0
    let mut diag = vec![-2.0 / (h * h) + shift; n];
    let mut off = vec![1.0 / (h * h); n - 1];
    diag[0] = -2.0 * (1.0 + h * beta) / (h * h) + shift;
    off[0] = std::f64::consts::SQRT_2 / (h * h);
    Ok(top_eigenvalues_symtridiag(&diag, &off, count))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_slope_gives_point_eigenvalue() {
        let s = a0_spectrum(2.0, -1.0).unwrap();
        assert_eq!(s.point_eigenvalue, Some(3.0));
        assert_eq!(s.essential_edge, -1.0);
        let top = discrete_a0_top(2.0, -1.0, 20.0, 4000, 1).unwrap();
        assert!((top[0] - 3.0).abs() < 1e-3, "{top:?}");
    }

    #[test]
    fn no_eigenvalue_above_half_speed() {
        let s = a0_spectrum(2.0, 2.0).unwrap();
        assert_eq!(s.formula_value, 0.0);
        assert!(s.point_eigenvalue.is_none());
        // the discrete top eigenvalue sits at the essential edge
        let top = discrete_a0_top(2.0, 2.0, 40.0, 4000, 1).unwrap();
        assert!(top[0] < -1.0 && top[0] > -1.01, "{top:?}");
    }

    #[test]
    fn diffusive_limit() {
        let s = a0_spectrum(0.0, -0.7).unwrap();
        assert_eq!(s.essential_edge, 0.0);
        assert!((s.point_eigenvalue.unwrap() - 0.49).abs() < 1e-15);
        let top = discrete_a0_top(0.0, -0.7, 30.0, 3000, 1).unwrap();
        assert!((top[0] - 0.49).abs() < 1e-3, "{top:?}");
    }
}
