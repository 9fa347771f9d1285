use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{top_eigenvalues_symtridiag, TridiagLu};

use super::profile::v_star;

/// Boundary coefficient β in φ′(0) = βφ(0) for the linearization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum BoundaryCoefficient {
    /// β = −2V*(0), linearizing V′ = −V² at the profile.
    Profile,
    /// β = 0; the spectrum is then known in closed form.
    Neumann,
    Custom(f64),
}

impl BoundaryCoefficient {
    pub fn beta(self) -> f64 {
        match self {
            Self::Profile => -2.0 * v_star(0.0),
            Self::Neumann => 0.0,
            Self::Custom(b) => b,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderLevel {
    pub n: usize,
    pub h: f64,
    /// Leading eigenvalues of φ″ − ξφ′/2 − φ/2, descending.
    #[serde(rename = "eigs")]
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub xi_max: f64,
    pub beta: f64,
    #[serde(rename = "ladder")]
    pub levels: Vec<LadderLevel>,
    /// Richardson extrapolation of the two finest levels.
    pub extrapolated: Vec<f64>,
    /// Change of the extrapolated values against the previous pair of levels.
    pub extrapolation_change: Vec<f64>,
    /// Successive level differences shrink for every tracked eigenvalue.
    pub cauchy: bool,
    /// Ratio of the last two level differences per eigenvalue; about 4 for
    /// a second-order scheme on a doubling ladder.
    pub convergence_ratio: Vec<f64>,
}

impl SpectrumReport {
    pub fn unstable(&self) -> Vec<f64> {
        self.extrapolated.iter().copied().filter(|&l| l > 0.0).collect()
    }

    /// Largest extrapolated eigenvalue below zero.
    pub fn leading_stable(&self) -> Option<f64> {
        self.extrapolated.iter().copied().find(|&l| l < 0.0)
    }
}

/// Conjugating with e^{−ξ²/8} turns the weighted operator into
/// ψ″ − (ξ²/16 + 1/4)ψ with ψ′(0) = βψ(0). Ghost-node Robin row, Dirichlet
/// at xi_max, symmetrized by scaling the first unknown.
fn symmetric_matrix(xi_max: f64, n: usize, beta: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let h = xi_max / n as f64;
    let h2 = h * h;
    let pot = |xi: f64| xi * xi / 16.0 + 0.25;
    let diag: Vec<f64> =
        (0..n).map(|i| if i == 0 { -2.0 * (1.0 + h * beta) / h2 - pot(0.0) } else { -2.0 / h2 - pot(i as f64 * h) }).collect();
    let mut off = vec![1.0 / h2; n - 1];
    off[0] = 2f64.sqrt() / h2;
    (diag, off, h)
}

/// Second-order Richardson extrapolation from spacings h_coarse > h_fine.
pub fn richardson(coarse: f64, fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    let r2 = (h_coarse / h_fine).powi(2);
    fine + (fine - coarse) / (r2 - 1.0)
}

/// Leading `count` eigenvalues of the linearization at the stationary
/// profile, on each resolution in `ladder`, extrapolated in h.
pub fn similarity_spectrum(ladder: &[usize], xi_max: f64, bc: BoundaryCoefficient, count: usize) -> Result<SpectrumReport> {
    if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] < 16 {
        return Err(Error::input("ladder needs at least two increasing resolutions of 16 or more"));
    }
    if !(xi_max >= 8.0) {
        return Err(Error::input(format!("xi_max must be at least 8, got {xi_max}")));
    }
    let beta = bc.beta();
    let levels: Vec<LadderLevel> = ladder
        .iter()
        .map(|&n| {
            let (d, o, h) = symmetric_matrix(xi_max, n, beta);
            LadderLevel { n, h, eigenvalues: top_eigenvalues_symtridiag(&d, &o, count) }
        })
        .collect();
    let extrap = |a: &LadderLevel, b: &LadderLevel| -> Vec<f64> {
        a.eigenvalues.iter().zip(&b.eigenvalues).map(|(&x, &y)| richardson(x, y, a.h, b.h)).collect()
    };
    let m = levels.len();
    let extrapolated = extrap(&levels[m - 2], &levels[m - 1]);
    let extrapolation_change = if m >= 3 {
        extrap(&levels[m - 3], &levels[m - 2]).iter().zip(&extrapolated).map(|(a, b)| (a - b).abs()).collect()
    } else {
        levels[m - 1].eigenvalues.iter().zip(&extrapolated).map(|(a, b)| (a - b).abs()).collect()
    };
    let diffs: Vec<Vec<f64>> = levels
        .windows(2)
        .map(|w| w[0].eigenvalues.iter().zip(&w[1].eigenvalues).map(|(a, b)| (a - b).abs()).collect())
        .collect();
    let cauchy = diffs.windows(2).all(|d| d[0].iter().zip(&d[1]).all(|(a, b)| b <= a));
    let convergence_ratio = if diffs.len() >= 2 {
        let (a, b) = (&diffs[diffs.len() - 2], &diffs[diffs.len() - 1]);
        a.iter().zip(b).map(|(x, y)| x / y).collect()
    } else {
        Vec::new()
    };
    Ok(SpectrumReport { xi_max, beta, levels, extrapolated, extrapolation_change, cauchy, convergence_ratio })
}

/// Eigenfunction of the positive eigenvalue on a uniform grid of n nodes in
/// [0, xi_max), normalized to φ(0) = 1. Returns (ξ, φ, eigenvalue).
pub fn unstable_eigenfunction(xi_max: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let beta = BoundaryCoefficient::Profile.beta();
    let (d, o, h) = symmetric_matrix(xi_max, n, beta);
    let lam = top_eigenvalues_symtridiag(&d, &o, 1)[0];
    if !(lam > 0.0) {
        return Err(Error::NotFound("no positive eigenvalue".into()));
    }
    let shift = lam + 1e-10 * lam.abs().max(1.0);
    let diag: Vec<f64> = d.iter().map(|x| x - shift).collect();
    let lu = TridiagLu::new(&o, &diag, &o);
    let mut v = vec![1.0; n];
    for _ in 0..4 {
        lu.solve_in_place(&mut v);
        let s = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v.iter_mut().for_each(|x| *x /= s);
    }
    v[0] *= 2f64.sqrt();
    let xi: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let mut phi: Vec<f64> = xi.iter().zip(&v).map(|(&x, &p)| (x * x / 8.0).exp() * p).collect();
    let p0 = phi[0];
    phi.iter_mut().for_each(|x| *x /= p0);
    Ok((xi, phi, lam))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumann_levels_are_shifted_hermite() {
        let rep = similarity_spectrum(&[400, 800, 1600], 20.0, BoundaryCoefficient::Neumann, 3).unwrap();
        for (k, &l) in rep.extrapolated.iter().enumerate() {
            let exact = -(k as f64) - 0.5;
            assert!((l - exact).abs() < 1e-6, "level {k}: {l}");
        }
    }

    #[test]
    fn profile_boundary_has_one_unstable_direction() {
        let rep = similarity_spectrum(&[400, 800, 1600], 20.0, BoundaryCoefficient::Profile, 3).unwrap();
        assert_eq!(rep.unstable().len(), 1);
        assert!((rep.unstable()[0] - 1.0).abs() < 1e-3, "{:?}", rep.extrapolated);
        assert!(rep.cauchy);
        for r in &rep.convergence_ratio {
            assert!((r - 4.0).abs() < 0.2, "{:?}", rep.convergence_ratio);
        }
        let s = rep.leading_stable().unwrap();
        assert!((s + 1.2316).abs() < 5e-3, "{s}");
    }

    #[test]
    fn unstable_mode_has_no_sign_change() {
        let (_, phi, lam) = unstable_eigenfunction(20.0, 800).unwrap();
        assert!(lam > 0.9);
        assert!(phi.iter().take(400).all(|&p| p > 0.0));
    }
}
