//! Truncated half-line meshes and sampled profiles.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 8;

/// Largest exponent accepted when weighting by e^{±cx/2}.
const MAX_WEIGHT_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Stretching {
    Uniform,
    /// Nodes clustered at x = 0; larger `beta` clusters harder.
    TanhClustered { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    length: f64,
    stretching: Stretching,
    nodes: Vec<f64>,
}

impl Grid1D {
    pub fn new(length: f64, n: usize, stretching: Stretching) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::input(format!("grid length must be positive, got {length}")));
        }
        if n < MIN_NODES {
            return Err(Error::input(format!("grid needs at least {MIN_NODES} nodes, got {n}")));
        }
        let last = (n - 1) as f64;
        let nodes: Vec<f64> = match stretching {
            Stretching::Uniform => (0..n).map(|i| length * i as f64 / last).collect(),
            Stretching::TanhClustered { beta } => {
                if !(beta > 0.0) {
                    return Err(Error::input("tanh clustering needs beta > 0"));
                }
                let tb = beta.tanh();
                (0..n)
                    .map(|i| {
                        let s = i as f64 / last;
                        length * (1.0 - (beta * (1.0 - s)).tanh() / tb)
                    })
                    .collect()
            }
        };
        let mut nodes = nodes;
        nodes[0] = 0.0;
        nodes[n - 1] = length;
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::input("grid nodes are not strictly increasing"));
        }
        Ok(Self { length, stretching, nodes })
    }

    pub fn uniform(length: f64, n: usize) -> Result<Self> {
        Self::new(length, n, Stretching::Uniform)
    }

    /// Grid from explicit nodes, which must start at 0 and increase.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::input(format!("grid needs at least {MIN_NODES} nodes")));
        }
        if nodes[0] != 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::input("grid nodes must start at 0 and strictly increase"));
        }
        let length = *nodes.last().unwrap();
        Ok(Self { length, stretching: Stretching::Uniform, nodes })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn stretching(&self) -> Stretching {
        self.stretching
    }

    /// Spacing h_i = x_{i+1} - x_i.
    pub fn spacing(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index i with x_i <= x < x_{i+1}, clamped to the last interval.
    pub fn locate(&self, x: f64) -> usize {
        match self.nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.len() - 2),
        }
    }

    /// Trapezoid weights for ∫_0^L.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = self.spacing(i);
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }
}

/// Affine continuation u ≈ strain·x + intercept beyond the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FarField {
    pub strain: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
    farfield: FarField,
}

impl Field {
    pub fn new(grid: Arc<Grid1D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::input(format!(
                "field has {} values on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("field contains non-finite values"));
        }
        let mut f = Self { grid, values, farfield: FarField::default() };
        f.farfield = f.tail_fit();
        Ok(f)
    }

    pub fn from_fn(grid: Arc<Grid1D>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid1D>, value: f64) -> Result<Self> {
        Self::from_fn(grid, |_| value)
    }

    pub fn with_farfield(mut self, farfield: FarField) -> Result<Self> {
        if !farfield.strain.is_finite() || !farfield.intercept.is_finite() {
            return Err(Error::input("far-field data must be finite"));
        }
        self.farfield = farfield;
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn farfield(&self) -> FarField {
        self.farfield
    }

    pub fn at_origin(&self) -> f64 {
        self.values[0]
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::norm_inf(&self.values)
    }

    /// Secant slope through the last two nodes.
    fn tail_fit(&self) -> FarField {
        let n = self.values.len();
        let xs = self.grid.nodes();
        let strain = (self.values[n - 1] - self.values[n - 2]) / (xs[n - 1] - xs[n - 2]);
        FarField { strain, intercept: self.values[n - 1] - strain * xs[n - 1] }
    }

    /// Cubic Lagrange interpolation on the four nearest nodes; affine
    /// far-field continuation beyond the last node.
    pub fn eval(&self, x: f64) -> f64 {
        let xs = self.grid.nodes();
        let n = xs.len();
        if x >= xs[n - 1] {
            return self.values[n - 1] + self.farfield.strain * (x - xs[n - 1]);
        }
        let x = x.max(0.0);
        let i = self.grid.locate(x);
        let lo = i.saturating_sub(1).min(n - 4);
        let mut s = 0.0;
        for a in lo..lo + 4 {
            let mut w = 1.0;
            for b in lo..lo + 4 {
                if a != b {
                    w *= (x - xs[b]) / (xs[a] - xs[b]);
                }
            }
            s += w * self.values[a];
        }
        s
    }

    /// Second-order derivative at every node (three-point stencils).
    pub fn derivative(&self) -> Vec<f64> {
        derivative(self.grid.nodes(), &self.values)
    }

    /// Pointwise multiplication by e^{-cx/2}.
    pub fn to_weighted(&self, c: f64) -> Result<Field> {
        self.reweight(-0.5 * c)
    }

    /// Pointwise multiplication by e^{cx/2}.
    pub fn from_weighted(&self, c: f64) -> Result<Field> {
        self.reweight(0.5 * c)
    }

    fn reweight(&self, rate: f64) -> Result<Field> {
        if (rate * self.grid.length()).abs() > MAX_WEIGHT_EXPONENT {
            return Err(Error::Range(format!(
                "weight e^({rate}·x) overflows on [0, {}]; shrink the truncation length",
                self.grid.length()
            )));
        }
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| v * (rate * x).exp())
            .collect();
        Field::new(self.grid.clone(), values)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,u\n");
        for (x, u) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(s, "{x:.17e},{u:.17e}").unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Field> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "x,u" => {}
            other => return Err(Error::input(format!("expected header \"x,u\", got {other:?}"))),
        }
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for (k, line) in lines.enumerate() {
            let mut it = line.split(',');
            let parse = |v: Option<&str>| -> Result<f64> {
                v.ok_or_else(|| Error::input(format!("row {}: missing column", k + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::input(format!("row {}: {e}", k + 1)))
            };
            xs.push(parse(it.next())?);
            us.push(parse(it.next())?);
        }
        let grid = Arc::new(Grid1D::from_nodes(xs)?);
        Field::new(grid, us)
    }
}

/// Second-order first derivative on a nonuniform mesh.
pub fn derivative(xs: &[f64], v: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        let (a, b, c) = if i == 0 {
            (0, 1, 2)
        } else if i == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (i - 1, i, i + 1)
        };
        let (x0, x1, x2) = (xs[a], xs[b], xs[c]);
        let x = xs[i];
        let l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        let l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        let l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        d[i] = l0 * v[a] + l1 * v[b] + l2 * v[c];
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_invariants() {
        for st in [Stretching::Uniform, Stretching::TanhClustered { beta: 2.5 }] {
            let g = Grid1D::new(12.0, 64, st).unwrap();
            assert_eq!(g.nodes()[0], 0.0);
            assert_eq!(*g.nodes().last().unwrap(), 12.0);
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        }
        let g = Grid1D::new(12.0, 64, Stretching::TanhClustered { beta: 2.5 }).unwrap();
        assert!(g.spacing(0) < g.spacing(62));
        assert!(Grid1D::uniform(1.0, 7).is_err());
        assert!(Grid1D::uniform(-1.0, 10).is_err());
    }

    #[test]
    fn weighting_examples() {
        let grid = Arc::new(Grid1D::uniform(10.0, 101).unwrap());
        let u = Field::from_fn(grid.clone(), |x| (0.5 * x).exp()).unwrap();
        let w = u.to_weighted(1.0).unwrap();
        assert!(w.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let v = Field::from_fn(grid, |x| x.sin()).unwrap();
        assert_eq!(v.to_weighted(0.0).unwrap(), v);
        let big = Arc::new(Grid1D::uniform(1000.0, 10).unwrap());
        let f = Field::constant(big, 1.0).unwrap();
        assert!(matches!(f.from_weighted(2.0), Err(Error::Range(_))));
    }

    #[test]
    fn interpolation_and_extension() {
        let grid = Arc::new(Grid1D::new(5.0, 80, Stretching::TanhClustered { beta: 1.5 }).unwrap());
        let f = Field::from_fn(grid, |x| 2.0 * x - 1.0).unwrap();
        for x in [0.0, 0.013, 1.7, 4.99, 5.0, 9.0] {
            assert!((f.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
        let d = f.derivative();
        assert!(d.iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    #[test]
    fn csv_roundtrip() {
        let grid = Arc::new(Grid1D::uniform(3.0, 16).unwrap());
        let f = Field::from_fn(grid, |x| x.cos()).unwrap();
        let back = Field::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(Field::from_csv("t,u\n0,1\n").is_err());
    }

    proptest! {
        #[test]
        fn weighting_roundtrip(vals in prop::collection::vec(-10.0..10.0f64, 64)) {
            let grid = Arc::new(Grid1D::uniform(10.0, 64).unwrap());
            let f = Field::new(grid, vals).unwrap();
            let back = f.to_weighted(2.0).unwrap().from_weighted(2.0).unwrap();
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
            }
        }
    }
}
