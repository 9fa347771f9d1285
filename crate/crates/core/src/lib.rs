//! Advection–diffusion on the half-line with a periodic nonlinear flux
//! boundary condition: time integration, relative periodic orbits,
//! connections between boundary equilibria, and the diffusive similarity
//! regime.

// NaN must fail range checks, hence !(x > 0.0) style comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod connections;
pub mod error;
pub mod evolve;
pub mod flux;
pub mod grid;
pub mod linalg;
pub mod modes;
pub mod orbits;
pub mod quad;
pub mod selfsim;
pub mod special;

pub use error::{Error, Result};
pub use flux::FluxModel;
pub use grid::{FarField, Field, Grid1D, Stretching};
pub use modes::{mode_rates, ModeRates};

use serde::{Deserialize, Serialize};

/// Problem parameters: advection speed and boundary flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub c: f64,
    pub flux: FluxModel,
}

impl Params {
    pub fn new(c: f64, flux: FluxModel) -> Result<Self> {
        let p = Self { c, flux };
        p.validate()?;
        Ok(p)
    }

    pub fn cosine(c: f64, theta: f64) -> Result<Self> {
        Self::new(c, FluxModel::cosine(theta))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::input(format!("advection speed must be finite and >= 0, got {}", self.c)));
        }
        Ok(())
    }

    /// Default truncation length for c > 0.
    pub fn default_length(&self) -> f64 {
        if self.c > 0.0 {
            (12.0 / self.c).max(10.0)
        } else {
            10.0
        }
    }
}
