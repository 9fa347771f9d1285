//! Time-T flow map of the discretized problem and its tangent.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::evolve::{Discretization, FarBoundary, StepRule, Stepper};
use crate::flux::FluxModel;
use crate::grid::Grid1D;

/// Trapezoid-rule flow map with a fixed number of steps per period.
#[derive(Debug, Clone)]
pub struct FlowMap {
    stepper: Stepper,
    steps: usize,
}

/// A stored base trajectory for tangent propagation.
#[derive(Debug, Clone)]
pub struct BasePath {
    pub period: f64,
    pub states: Vec<Vec<f64>>,
}

impl BasePath {
    pub fn end(&self) -> &[f64] {
        self.states.last().unwrap()
    }
}

impl FlowMap {
    pub fn new(grid: Arc<Grid1D>, c: f64, flux: FluxModel, steps: usize) -> Self {
        let disc = Discretization::new(grid, c, FarBoundary::Outflow);
        Self { stepper: Stepper::new(disc, flux), steps: steps.max(1) }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        self.stepper.disc().grid()
    }

    pub fn flux(&self) -> &FluxModel {
        self.stepper.flux()
    }

    pub fn c(&self) -> f64 {
        self.stepper.disc().c()
    }

    /// Semi-discrete vector field at `u`.
    pub fn vector_field(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.stepper.disc().rhs(self.stepper.flux(), u, &mut out);
        out
    }

    /// u(T) without storing intermediate states.
    pub fn advance(&mut self, u0: &[f64], period: f64) -> Result<Vec<f64>> {
        let dt = period / self.steps as f64;
        let mut u = u0.to_vec();
        for _ in 0..self.steps {
            self.stepper.step(StepRule::Theta(0.5), dt, &mut u, None)?;
        }
        check_finite(&u)?;
        Ok(u)
    }

    /// u(T) with all intermediate states.
    pub fn path(&mut self, u0: &[f64], period: f64) -> Result<BasePath> {
        let dt = period / self.steps as f64;
        let mut states = Vec::with_capacity(self.steps + 1);
        let mut u = u0.to_vec();
        states.push(u.clone());
        for _ in 0..self.steps {
            self.stepper.step(StepRule::Theta(0.5), dt, &mut u, None)?;
            states.push(u.clone());
        }
        check_finite(&u)?;
        Ok(BasePath { period, states })
    }

    /// Derivative of u(T) with respect to u0 in direction `v`.
    pub fn tangent(&mut self, base: &BasePath, v: &[f64]) -> Result<Vec<f64>> {
        let dt = base.period / self.steps as f64;
        let mut w = v.to_vec();
        for j in 0..self.steps {
            self.stepper
                .step_tangent(StepRule::Theta(0.5), dt, &base.states[j], &base.states[j + 1], &mut w, None)?;
        }
        Ok(w)
    }
}

fn check_finite(u: &[f64]) -> Result<()> {
    if u.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::solver("flow map produced non-finite values"))
    }
}
