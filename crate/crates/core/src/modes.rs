//! Spatial decay rates of time-harmonic boundary-driven modes.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Rates for a mode e^{ikωt}: `nu_*` solve ν² = c²/4 + ikω (weighted
/// equation), `eta_*` solve η² − cη − ikω = 0 (unweighted equation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeRates {
    pub k: i64,
    pub omega: f64,
    pub c: f64,
    pub nu_plus: Complex64,
    pub nu_minus: Complex64,
    pub eta_plus: Complex64,
    pub eta_minus: Complex64,
}

pub fn mode_rates(k: i64, omega: f64, c: f64) -> Result<ModeRates> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::input(format!("mode rates need omega > 0, got {omega}")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::input(format!("mode rates need c >= 0, got {c}")));
    }
    Ok(mode_rates_real(k as f64, omega, c, k))
}

/// Same formulas with a real mode index, used for continuity checks.
pub fn mode_rates_real(kr: f64, omega: f64, c: f64, k: i64) -> ModeRates {
    let nu = Complex64::new(0.25 * c * c, kr * omega).sqrt();
    let disc = Complex64::new(c * c, 4.0 * kr * omega).sqrt();
    ModeRates {
        k,
        omega,
        c,
        nu_plus: nu,
        nu_minus: -nu,
        eta_plus: 0.5 * (c + disc),
        eta_minus: 0.5 * (c - disc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn real_case() {
        let r = mode_rates(0, 1.0, 2.0).unwrap();
        assert_eq!(r.nu_plus, Complex64::new(1.0, 0.0));
        assert_eq!(r.nu_minus, Complex64::new(-1.0, 0.0));
        assert_eq!(r.eta_plus, Complex64::new(2.0, 0.0));
        assert_eq!(r.eta_minus, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn first_mode_value() {
        // Re sqrt(a + ib) = sqrt((|z| + a)/2) with a = 1, b = 1
        let r = mode_rates(1, 1.0, 2.0).unwrap();
        let oracle = -((1.0 + 2f64.sqrt()) / 2.0).sqrt();
        assert!((r.nu_minus.re - oracle).abs() < 1e-15);
        assert!((r.nu_minus.re + 1.098_684).abs() < 1e-6);
    }

    #[test]
    fn sign_structure() {
        for &c in &[0.1, 1.0, 10.0] {
            for k in 1..=64 {
                let r = mode_rates(k, 1.0, c).unwrap();
                assert!(r.eta_minus.re < 0.0);
                assert!(r.eta_plus.re > c);
                assert!(r.nu_plus.re > 0.0 && (r.nu_plus.re + r.nu_minus.re).abs() == 0.0);
                // η = c/2 + ν links the two families
                assert!((r.eta_plus - (0.5 * c + r.nu_plus)).norm() < 1e-12 * (1.0 + c));
            }
        }
        assert!(mode_rates(1, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn continuous_in_parameters(k in -10.0..10.0f64, w in 0.1..5.0f64, c in 0.05..5.0f64) {
            let a = mode_rates_real(k, w, c, 0);
            let d = 1e-7;
            for b in [mode_rates_real(k + d, w, c, 0), mode_rates_real(k, w + d, c, 0),
                      mode_rates_real(k, w, c + d, 0)] {
                prop_assert!((a.nu_plus - b.nu_plus).norm() < 1e-4);
                prop_assert!((a.eta_minus - b.eta_minus).norm() < 1e-4);
            }
        }
    }
}
