use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Checks {
    items: Vec<Check>,
    strict: bool,
}

impl Checks {
    pub fn new(strict: bool) -> Self {
        Self { items: Vec::new(), strict }
    }

    pub fn hard(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.items.push(Check { name: name.into(), hard: true, passed, detail: detail.into() });
    }

    /// Soft checks become hard under `--strict`.
    pub fn soft(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        let hard = self.strict;
        self.items.push(Check { name: name.into(), hard, passed, detail: detail.into() });
    }

    pub fn failed_hard(&self) -> bool {
        self.items.iter().any(|c| c.hard && !c.passed)
    }

    pub fn into_vec(self) -> Vec<Check> {
        self.items
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub software_version: String,
    pub config: Value,
    /// Grid and step metadata of the run.
    pub metadata: Value,
    pub wall_time_s: f64,
    /// "ok", "invariant-failure" or "error"
    pub status: String,
    pub message: Option<String>,
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
}
