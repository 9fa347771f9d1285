//! Small dense and banded linear-algebra kernels used by the solvers.

/// LU factors of a tridiagonal matrix (no pivoting; the matrices we factor
/// are diagonally dominant M-matrices or close to it).
#[derive(Debug, Clone)]
pub struct TridiagLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagLu {
    /// `sub[i]` couples row i+1 to column i, `sup[i]` couples row i to
    /// column i+1.
    pub fn new(sub: &[f64], diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        assert!(sub.len() + 1 == n && sup.len() + 1 == n);
        let mut d = diag.to_vec();
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 1..n {
            l[i - 1] = sub[i - 1] / d[i - 1];
            d[i] -= l[i - 1] * sup[i - 1];
        }
        Self { lower: l, diag: d, upper: sup.to_vec() }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.diag.len();
        for i in 1..n {
            x[i] -= self.lower[i - 1] * x[i - 1];
        }
        x[n - 1] /= self.diag[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.upper[i] * x[i + 1]) / self.diag[i];
        }
    }
}

/// y = T x for a tridiagonal T.
pub fn tridiag_mul(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64], y: &mut [f64]) {
    let n = diag.len();
    for i in 0..n {
        let mut s = diag[i] * x[i];
        if i > 0 {
            s += sub[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            s += sup[i] * x[i + 1];
        }
        y[i] = s;
    }
}

/// Solves the cyclic tridiagonal system with constant bands
/// (off, diag, off) by Sherman-Morrison.
pub fn solve_cyclic_constant(off: f64, diag: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    assert!(n >= 3);
    let gamma = -diag;
    let mut d = vec![diag; n];
    d[0] = diag - gamma;
    d[n - 1] = diag - off * off / gamma;
    let sub = vec![off; n - 1];
    let lu = TridiagLu::new(&sub, &d, &sub);
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    lu.solve_in_place(&mut u);
    let fact = (x[0] + off * x[n - 1] / gamma) / (1.0 + u[0] + off * u[n - 1] / gamma);
    x.iter().zip(&u).map(|(a, b)| a - fact * b).collect()
}

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, off)
/// strictly less than `x` (Sturm sequence count).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` largest eigenvalues (descending) of a symmetric tridiagonal
/// matrix by Sturm bisection.
pub fn top_eigenvalues_symtridiag(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    // Gershgorin bracket
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let k = k.min(n);
    (0..k)
        .map(|j| {
            // eigenvalue with index n-1-j in ascending order
            let target = n - 1 - j;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                if sturm_count(diag, off, m) > target {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Outcome of a GMRES solve.
#[derive(Debug, Clone)]
pub struct GmresReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Unrestarted GMRES for A x = b with a matrix-free operator, x0 = 0.
/// Stops at `rtol` relative residual or after `max_iter` Krylov vectors.
pub fn gmres(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> (Vec<f64>, GmresReport) {
    let n = b.len();
    let beta = norm2(b);
    if beta == 0.0 {
        return (vec![0.0; n], GmresReport { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let max_iter = max_iter.min(n).max(1);
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // Hessenberg columns after Givens rotations
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut res = beta;
    let mut k = 0;
    while k < max_iter {
        let mut w = apply(&basis[k]);
        let mut h = vec![0.0; k + 2];
        // modified Gram-Schmidt, twice
        for _ in 0..2 {
            for (j, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[j] += hij;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hij * vi;
                }
            }
        }
        let hn = norm2(&w);
        h[k + 1] = hn;
        for (j, &(c, s)) in cs.iter().enumerate() {
            let (a, b2) = (h[j], h[j + 1]);
            h[j] = c * a + s * b2;
            h[j + 1] = -s * a + c * b2;
        }
        let (a, b2) = (h[k], h[k + 1]);
        let r = a.hypot(b2);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b2 / r) };
        h[k] = r;
        h[k + 1] = 0.0;
        cs.push((c, s));
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        res = g[k + 1].abs();
        h.truncate(k + 1);
        r_cols.push(h);
        k += 1;
        if res <= rtol * beta || hn == 0.0 {
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }
    // back substitution
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= r_cols[j][i] * y[j];
        }
        y[i] = s / r_cols[i][i];
    }
    let mut x = vec![0.0; n];
    for (j, yj) in y.iter().enumerate() {
        for (xi, vi) in x.iter_mut().zip(&basis[j]) {
            *xi += yj * vi;
        }
    }
    let rel = res / beta;
    (x, GmresReport { iterations: k, relative_residual: rel, converged: rel <= rtol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiag_roundtrip() {
        let sub = [1.0, -0.5, 0.25];
        let diag = [4.0, 5.0, 6.0, 3.0];
        let sup = [0.3, 1.0, -1.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = [0.0; 4];
        tridiag_mul(&sub, &diag, &sup, &x, &mut b);
        let lu = TridiagLu::new(&sub, &diag, &sup);
        lu.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn cyclic_solver() {
        let n = 7;
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = solve_cyclic_constant(1.0, 4.0, &rhs);
        for i in 0..n {
            let lhs = 4.0 * x[i] + x[(i + n - 1) % n] + x[(i + 1) % n];
            assert!((lhs - rhs[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn sturm_bisection_discrete_laplacian() {
        // eigenvalues of tridiag(1,-2,1) of size n: -4 sin^2(k pi / (2(n+1)))
        let n = 50;
        let diag = vec![-2.0; n];
        let off = vec![1.0; n - 1];
        let top = top_eigenvalues_symtridiag(&diag, &off, 3);
        for (j, ev) in top.iter().enumerate() {
            let k = (j + 1) as f64;
            let exact = -4.0 * (k * std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
            assert!((ev - exact).abs() < 1e-12, "{ev} vs {exact}");
        }
    }

    #[test]
    fn gmres_solves_small_system() {
        let a = [[4.0, 1.0, 0.0], [2.0, 5.0, 1.0], [0.0, -1.0, 3.0]];
        let b = [1.0, 2.0, 3.0];
        let (x, rep) = gmres(
            |v| (0..3).map(|i| (0..3).map(|j| a[i][j] * v[j]).sum()).collect(),
            &b,
            1e-13,
            10,
        );
        assert!(rep.converged);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i][j] * x[j]).sum::<f64>() - b[i];
            assert!(r.abs() < 1e-12);
        }
    }
}
