//! Simulation configuration (JSON file and command-line overrides).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorId;
use crate::error::{Error, Result};
use crate::hamiltonian::{self, ExprAst};
use crate::structures::{StateVector, StructureId, BLOCKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown trajectory format `{other}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub structure: StructureId,
    pub n: usize,
    pub hamiltonian: String,
    pub x0: Vec<f64>,
    pub integrator: IntegratorId,
    pub dt: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

/// Every field optional, for merging a file with flag overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub structure: Option<StructureId>,
    pub n: Option<usize>,
    pub hamiltonian: Option<String>,
    pub x0: Option<Vec<f64>>,
    pub integrator: Option<IntegratorId>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub output: Option<OutputSpec>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` win.
    pub fn merged(self, over: PartialConfig) -> PartialConfig {
        PartialConfig {
            structure: over.structure.or(self.structure),
            n: over.n.or(self.n),
            hamiltonian: over.hamiltonian.or(self.hamiltonian),
            x0: over.x0.or(self.x0),
            integrator: over.integrator.or(self.integrator),
            dt: over.dt.or(self.dt),
            steps: over.steps.or(self.steps),
            output: over.output.or(self.output),
        }
    }

    pub fn resolve(self) -> Result<SimulationConfig> {
        let missing = |f: &str| Error::InvalidConfig(format!("missing field `{f}`"));
        let cfg = SimulationConfig {
            structure: self.structure.ok_or_else(|| missing("structure"))?,
            n: self.n.ok_or_else(|| missing("n"))?,
            hamiltonian: self.hamiltonian.ok_or_else(|| missing("hamiltonian"))?,
            x0: self.x0.ok_or_else(|| missing("x0"))?,
            integrator: self.integrator.ok_or_else(|| missing("integrator"))?,
            dt: self.dt.ok_or_else(|| missing("dt"))?,
            steps: self.steps.ok_or_else(|| missing("steps"))?,
            output: self.output,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.x0.len() != BLOCKS * self.n {
            return bad(format!(
                "x0 has {} components, expected 8n = {}",
                self.x0.len(),
                BLOCKS * self.n
            ));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return bad("x0 must be finite".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive and finite, got {}", self.dt));
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        hamiltonian::parse(&self.hamiltonian, self.n)
            .map_err(|e| Error::InvalidConfig(format!("hamiltonian: {e}")))?;
        Ok(())
    }

    pub fn parsed_hamiltonian(&self) -> Result<ExprAst> {
        hamiltonian::parse(&self.hamiltonian, self.n)
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        StateVector::from_vec(self.n, self.x0.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimulationConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
