//! Leading Floquet multipliers by subspace iteration on the monodromy map.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

use super::OrbitRecord;

#[derive(Debug, Clone)]
pub struct FloquetConfig {
    /// Number of multipliers reported.
    pub count: usize,
    /// Extra subspace vectors beyond `count`.
    pub guard: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FloquetConfig {
    fn default() -> Self {
        Self { count: 3, guard: 5, max_iter: 80, tol: 1e-11 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FloquetReport {
    /// Multipliers sorted by decreasing modulus.
    pub multipliers: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
    /// Angle (rad) between the leading eigenvector and the time derivative
    /// of the orbit, in the L² norm of the weighted profile.
    pub alignment_angle: f64,
    /// 1 − |second multiplier|.
    pub gap: f64,
}

struct Inner {
    w: Vec<f64>,
}

impl Inner {
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    fn norm(&self, a: &[f64]) -> f64 {
        self.dot(a, a).sqrt()
    }

    fn orthonormalize(&self, vs: &mut [Vec<f64>]) {
        for k in 0..vs.len() {
            for _ in 0..2 {
                for j in 0..k {
                    let (head, tail) = vs.split_at_mut(k);
                    let p = self.dot(&tail[0], &head[j]);
                    for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                        *x -= p * y;
                    }
                }
            }
            let nk = self.norm(&vs[k]);
            if nk > 0.0 {
                vs[k].iter_mut().for_each(|x| *x /= nk);
            }
        }
    }
}

fn sorted_eigenvalues(h: &DMatrix<f64>) -> Vec<Complex64> {
    let mut ev: Vec<Complex64> = h.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn floquet_leading(orbit: &OrbitRecord, cfg: &FloquetConfig) -> Result<FloquetReport> {
    let mut fm = orbit.flow_map();
    let grid = orbit.profile0.grid().clone();
    let xs = grid.nodes();
    let n = xs.len();
    let c = orbit.params.c;
    let inner = Inner { w: grid.trapezoid_weights().iter().zip(xs).map(|(w, x)| w * (-c * x).exp()).collect() };
    let base = fm.path(orbit.profile0.values(), orbit.period)?;
    let time_dir = fm.vector_field(orbit.profile0.values());

    let p = (cfg.count + cfg.guard).min(n);
    let length = grid.length();
    let mut vs: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            if j == 0 {
                time_dir.clone()
            } else {
                xs.iter().map(|&x| (j as f64 * std::f64::consts::PI * x / length).cos() + 0.1 * j as f64 * x / length).collect()
            }
        })
        .collect();
    inner.orthonormalize(&mut vs);

    let mut prev: Vec<Complex64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut h = DMatrix::<f64>::zeros(p, p);
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let zs: Vec<Vec<f64>> = vs.iter().map(|v| fm.tangent(&base, v)).collect::<Result<_>>()?;
        for i in 0..p {
            for j in 0..p {
                h[(i, j)] = inner.dot(&vs[i], &zs[j]);
            }
        }
        let ev = sorted_eigenvalues(&h);
        let lead: Vec<Complex64> = ev.iter().take(cfg.count).copied().collect();
        if prev.len() == lead.len() && lead.iter().zip(&prev).all(|(a, b)| (a - b).norm() <= cfg.tol) {
            converged = true;
            break;
        }
        prev = lead;
        vs = zs;
        inner.orthonormalize(&mut vs);
    }
    let multipliers = sorted_eigenvalues(&h);
    let mu1 = multipliers[0];
    if mu1.im.abs() > 1e-8 {
        return Err(Error::solver(format!("leading multiplier {mu1} is not real")));
    }
    // leading Ritz vector by inverse iteration on the small matrix
    let shift = DMatrix::<f64>::identity(p, p) * (mu1.re + 1e-12);
    let lu = (&h - shift).lu();
    let mut y = DVector::<f64>::from_element(p, 1.0);
    for _ in 0..4 {
        if let Some(next) = lu.solve(&y) {
            let nn = next.norm();
            y = next / nn;
        }
    }
    let mut ev = vec![0.0; n];
    for (k, v) in vs.iter().enumerate() {
        for i in 0..n {
            ev[i] += y[k] * v[i];
        }
    }
    let t_norm = inner.norm(&time_dir);
    let e_norm = inner.norm(&ev);
    let proj = inner.dot(&ev, &time_dir) / (t_norm * t_norm);
    let perp: Vec<f64> = ev.iter().zip(&time_dir).map(|(a, b)| a - proj * b).collect();
    let alignment_angle = (inner.norm(&perp) / e_norm).clamp(0.0, 1.0).asin();
    let gap = 1.0 - multipliers.get(1).map(|z| z.norm()).unwrap_or(0.0);
    Ok(FloquetReport {
        multipliers: multipliers.into_iter().take(cfg.count).collect(),
        iterations,
        converged,
        alignment_angle,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::OrbitGrid;

    #[test]
    fn trivial_orbit_multiplier_and_direction() {
        let grid = OrbitGrid { nodes: 160, length: 12.0, beta: 2.0 }.build().unwrap();
        let rec = OrbitRecord::trivial(1.0, grid, 0.0, 400).unwrap();
        let rep = floquet_leading(&rec, &FloquetConfig::default()).unwrap();
        assert!((rep.multipliers[0] - Complex64::new(1.0, 0.0)).norm() < 1e-8, "{:?}", rep.multipliers);
        assert!(rep.multipliers[1].norm() < 1.0);
        assert!(rep.alignment_angle < 1e-4, "{}", rep.alignment_angle);
    }
}
