//! Versioned JSON experiment configuration.

use std::path::PathBuf;

use clap::ValueEnum;
use halfline::connections::ConnectionConfig;
use halfline::evolve::EvolveConfig;
use halfline::selfsim::BoundaryCoefficient;
use halfline::Params;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    Orbit,
    Branch,
    Snic,
    Heteroclinic,
    Drift,
    Similarity,
    Spectrum,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Orbit => "orbit",
            Command::Branch => "branch",
            Command::Snic => "snic",
            Command::Heteroclinic => "heteroclinic",
            Command::Drift => "drift",
            Command::Similarity => "similarity",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Must match the subcommand when given.
    #[serde(default)]
    pub command: Option<Command>,
    pub params: Params,
    #[serde(default)]
    pub numerics: Option<EvolveConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub orbit: OrbitSection,
    #[serde(default)]
    pub branch: BranchSection,
    #[serde(default)]
    pub snic: SnicSection,
    #[serde(default)]
    pub heteroclinic: HeteroclinicSection,
    #[serde(default)]
    pub drift: DriftSection,
    #[serde(default)]
    pub similarity: SimilaritySection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Truncation length; `None` uses the parameter default.
    pub length: Option<f64>,
    pub nodes: usize,
    pub beta: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { length: None, nodes: 400, beta: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    Constant { value: f64 },
    /// value + slope·x
    Affine { value: f64, slope: f64 },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Affine { value: 0.0, slope: 1.0 }
    }
}

impl InitialData {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            InitialData::Constant { value } => value,
            InitialData::Affine { value, slope } => value + slope * x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    /// Also integrate the boundary Volterra equation and compare traces.
    pub volterra_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitSection {
    pub nodes: usize,
    pub steps_per_period: usize,
    pub attract_periods: f64,
    pub floquet: bool,
}

impl Default for OrbitSection {
    fn default() -> Self {
        Self { nodes: 400, steps_per_period: 2000, attract_periods: 40.0, floquet: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchSection {
    pub thetas: Vec<f64>,
    pub nodes: usize,
    pub steps_per_period: usize,
}

impl Default for BranchSection {
    fn default() -> Self {
        Self { thetas: (0..10).map(|k| k as f64 / 10.0).collect(), nodes: 200, steps_per_period: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnicSection {
    pub thetas: Vec<f64>,
}

impl Default for SnicSection {
    fn default() -> Self {
        Self { thetas: vec![0.9, 0.99, 0.999] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeteroclinicSection {
    /// Ramp indices of the instances compared after time translation.
    pub ramp_n: Vec<f64>,
    /// Index into the zero pairs over one gauge period.
    pub pair: usize,
    /// Comparison window [0, x_max] × [t_min, t_max].
    pub window: [f64; 3],
    pub connection: ConnectionConfig,
}

impl Default for HeteroclinicSection {
    fn default() -> Self {
        Self { ramp_n: vec![10.0, 100.0], pair: 0, window: [5.0, -1.0, 5.0], connection: ConnectionConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSection {
    pub t_end: f64,
    pub u0: f64,
    pub dt: f64,
    pub nodes: usize,
}

impl Default for DriftSection {
    fn default() -> Self {
        Self { t_end: 100.0, u0: 0.0, dt: 1e-2, nodes: 1200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilaritySection {
    pub profile_xi_max: f64,
    pub profile_n: usize,
    /// Start the flow at factor·V*.
    pub factor: f64,
    pub tau_end: f64,
    pub dtau: f64,
    pub xi_max: f64,
    pub n: usize,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        Self { profile_xi_max: 8.0, profile_n: 800, factor: 1.0, tau_end: 5.0, dtau: 1e-3, xi_max: 20.0, n: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub ladder: Vec<usize>,
    pub xi_max: f64,
    pub boundary: BoundaryCoefficient,
    pub count: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { ladder: vec![400, 800, 1600], xi_max: 20.0, boundary: BoundaryCoefficient::Profile, count: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Orbit period and strain per (θ, c) cell.
    Strain,
    /// Same cells with the coarser saddle-node orbit numerics.
    Snic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub thetas: Vec<f64>,
    pub cs: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { kind: SweepKind::Strain, thetas: vec![0.2, 0.5], cs: vec![0.5, 1.0] }
    }
}

fn finite_positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be finite and positive, got {v}"))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    /// Schema and range checks done before any computation.
    pub fn validate(&self, command: Command) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if let Some(c) = self.command {
            if c != command {
                return Err(format!("config is for `{}` but `{}` was invoked", c.name(), command.name()));
            }
        }
        self.params.validate().map_err(|e| e.to_string())?;
        if let Some(n) = &self.numerics {
            n.validate().map_err(|e| e.to_string())?;
        }
        if let Some(l) = self.grid.length {
            finite_positive("grid.length", l)?;
        }
        if self.grid.nodes < 8 {
            return Err("grid.nodes must be at least 8".into());
        }
        match command {
            Command::Evolve => {
                if self.numerics.is_none() {
                    return Err("evolve needs a `numerics` section".into());
                }
            }
            Command::Orbit => {
                if self.orbit.nodes < 16 || self.orbit.steps_per_period < 16 {
                    return Err("orbit needs nodes and steps_per_period of at least 16".into());
                }
                finite_positive("params.c", self.params.c)?;
            }
            Command::Branch => {
                finite_positive("params.c", self.params.c)?;
                if self.branch.thetas.first() != Some(&0.0) || self.branch.thetas.iter().any(|t| !(t.abs() < 1.0)) {
                    return Err("branch thetas must start at 0 and stay inside (-1, 1)".into());
                }
            }
            Command::Snic => {
                finite_positive("params.c", self.params.c)?;
                if self.snic.thetas.len() < 2 || self.snic.thetas.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
                    return Err("snic thetas need at least two values in (0, 1)".into());
                }
            }
            Command::Heteroclinic => {
                if self.heteroclinic.ramp_n.is_empty() || self.heteroclinic.ramp_n.iter().any(|n| !(*n > 0.0)) {
                    return Err("heteroclinic ramp_n must be a non-empty list of positive values".into());
                }
                let [x, t0, t1] = self.heteroclinic.window;
                if !(x > 0.0 && t1 > t0) {
                    return Err("heteroclinic window needs x_max > 0 and t_max > t_min".into());
                }
            }
            Command::Drift => {
                if self.params.c != 0.0 {
                    return Err("drift needs params.c = 0".into());
                }
                finite_positive("drift.t_end", self.drift.t_end)?;
                finite_positive("drift.dt", self.drift.dt)?;
            }
            Command::Similarity => {
                let s = &self.similarity;
                if !(s.profile_xi_max >= 8.0) {
                    return Err("similarity.profile_xi_max must be at least 8".into());
                }
                finite_positive("similarity.dtau", s.dtau)?;
                finite_positive("similarity.xi_max", s.xi_max)?;
                if !(s.tau_end >= 0.0) {
                    return Err("similarity.tau_end must be >= 0".into());
                }
            }
            Command::Spectrum => {
                let s = &self.spectrum;
                if s.ladder.len() < 2 || s.ladder.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("spectrum ladder needs at least two increasing resolutions".into());
                }
                if !(s.xi_max >= 8.0) {
                    return Err("spectrum.xi_max must be at least 8".into());
                }
            }
            Command::Sweep => {
                let s = &self.sweep;
                if s.thetas.is_empty() || s.cs.is_empty() {
                    return Err("sweep needs non-empty thetas and cs".into());
                }
                if s.thetas.iter().chain(&s.cs).any(|v| !v.is_finite()) || s.cs.iter().any(|c| *c <= 0.0) {
                    return Err("sweep grid must be finite with c > 0".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"schema_version":1,"params":{"c":1.0,"flux":{"kind":"cosine","theta":0.5}}}"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.orbit, OrbitSection::default());
        assert!(cfg.validate(Command::Orbit).is_ok());
        assert!(cfg.validate(Command::Evolve).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"schema_version\":1", "\"schema_version\":1,\"extra\":3");
        assert!(ExperimentConfig::parse(&text).is_err());
        let text = MINIMAL.replace("}}}", "}},\"orbit\":{\"nodez\":3}}");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn wrong_version_or_command_is_rejected() {
        let mut cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        cfg.schema_version = 2;
        assert!(cfg.validate(Command::Orbit).is_err());
        cfg.schema_version = 1;
        cfg.command = Some(Command::Drift);
        assert!(cfg.validate(Command::Orbit).is_err());
    }
}
