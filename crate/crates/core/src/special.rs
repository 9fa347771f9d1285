//! Error functions and the whole-line heat kernel.
//!
//! `erfc` switches from the Maclaurin series of `erf` to the Laplace
//! continued fraction of the scaled function `erfcx` at |x| = 1.5; both
//! branches are accurate to a few ulps relative on the range the solvers use.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SERIES_CUTOFF: f64 = 1.5;

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let contrib = term / (2 * n + 1) as f64;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    2.0 * FRAC_1_SQRT_PI * sum
}

/// e^{x^2} erfc(x) for x >= SERIES_CUTOFF by modified Lentz on
/// x + (1/2)/(x + 1/(x + (3/2)/(x + ...))).
fn erfcx_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..5000 {
        let a = 0.5 * n as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < SERIES_CUTOFF {
        erf_series(x)
    } else if x > 0.0 {
        1.0 - erfc(x)
    } else {
        erfc(-x) - 1.0
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < SERIES_CUTOFF {
        1.0 - erf_series(x)
    } else if x > 0.0 {
        if x > 27.3 {
            return 0.0;
        }
        (-x * x).exp() * erfcx_cf(x)
    } else {
        2.0 - erfc(-x)
    }
}

/// Scaled complementary error function e^{x^2} erfc(x). Overflows to
/// infinity for x below about -26.6.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= SERIES_CUTOFF {
        erfcx_cf(x)
    } else if x > -SERIES_CUTOFF {
        (x * x).exp() * (1.0 - erf_series(x))
    } else {
        2.0 * (x * x).exp() - erfcx_cf(-x)
    }
}

/// e^{a} erfc(z) without intermediate overflow; for z > 0 this is
/// e^{a - z^2} erfcx(z).
pub fn exp_erfc(a: f64, z: f64) -> f64 {
    if z > 0.0 {
        (a - z * z).exp() * erfcx(z)
    } else {
        a.exp() * erfc(z)
    }
}

/// Green function of ∂t = ∂xx − c²/4 on the whole line,
/// Γ(x,t) = (4πt)^{-1/2} exp(−c²t/4 − x²/(4t)).
pub fn heat_kernel(x: f64, t: f64, c: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(heat_kernel_unchecked(x, t, c))
}

#[inline]
pub(crate) fn heat_kernel_unchecked(x: f64, t: f64, c: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-0.25 * c * c * t - x * x / (4.0 * t)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;

    // Independent oracle: (2/sqrt(pi)) ∫_x^∞ e^{-s^2} ds by composite
    // Gauss-Legendre on [x, x + 12], reflected for x < 0.
    fn erfc_quadrature(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc_quadrature(-x);
        }
        let gl = GaussLegendre::new(20);
        let panels = 240;
        let h = 12.0 / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let a = x + p as f64 * h;
            s += gl.integrate(a, a + h, |y| (-y * y).exp());
        }
        2.0 * FRAC_1_SQRT_PI * s
    }

    #[test]
    fn erfc_basic_values() {
        assert_eq!(erfc(0.0), 1.0);
        assert!((erfc(1.0) - 0.157_299_207_050_285_13).abs() < 1e-16);
        for &x in &[0.1, 0.7, 1.3, 2.2, 4.0, 7.5] {
            assert!((erfc(x) + erfc(-x) - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn erfc_matches_quadrature_oracle() {
        let mut x = -8.0;
        while x <= 8.0 {
            let oracle = erfc_quadrature(x);
            let rel = (erfc(x) - oracle).abs() / oracle;
            assert!(rel < 1e-12, "x={x}: erfc={} oracle={oracle} rel={rel}", erfc(x));
            x += 0.0625;
        }
    }

    #[test]
    fn erfcx_consistent_across_branch_points() {
        for &x in &[1.49f64, 1.5, 1.51, 3.0, -1.49, -1.51, 10.0] {
            let direct = (x * x).exp() * erfc(x);
            assert!((erfcx(x) - direct).abs() < 1e-13 * direct.abs().max(1.0));
        }
        // large-argument asymptotics 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4))
        let x = 40.0_f64;
        let asym = FRAC_1_SQRT_PI / x * (1.0 - 0.5 / (x * x) + 0.75 / x.powi(4));
        assert!((erfcx(x) - asym).abs() / asym < 1e-9);
    }

    #[test]
    fn heat_kernel_values() {
        let t = 1.0 / (4.0 * PI);
        assert!((heat_kernel(0.0, t, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for &(x, t) in &[(0.3, 0.2), (2.0, 1.5), (5.0, 0.01)] {
            assert_eq!(heat_kernel(x, t, 1.3).unwrap(), heat_kernel(-x, t, 1.3).unwrap());
        }
        assert!(heat_kernel(0.0, 0.0, 1.0).is_err());
        assert!(heat_kernel(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn heat_kernel_mass() {
        let gl = GaussLegendre::new(20);
        let mut mass = 0.0;
        for p in 0..80 {
            let a = -20.0 + 0.5 * p as f64;
            mass += gl.integrate(a, a + 0.5, |x| heat_kernel(x, 1.0, 1.0).unwrap());
        }
        assert!((mass - (-0.25f64).exp()).abs() < 1e-14);
    }
}
