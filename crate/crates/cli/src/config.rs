//! JSON run configuration.
//!
//! ```json
//! {
//!   "model": { "kind": "nn", "ground_state": false },
//!   "parameters": { "beta": 1.0, "J": 0.5493, "B": 0.0 },
//!   "sweep": { "mode": "random", "points": 1000, "seed": 7,
//!              "ranges": [ { "name": "beta", "lo": 1e-4, "hi": 100, "scale": "log" } ] },
//!   "output": { "path": "out.csv", "nats": false }
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub kind: ModelKind,
    /// Evaluate at the ground-state inverse temperature instead of `beta`.
    #[serde(default)]
    pub ground_state: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    /// Parameters `beta`, `J`, `B`.
    Nn,
    /// Parameters `beta`, `J1`, `J2`, `B`.
    Nnn,
    /// Parameters `p`, `r`.
    Pbrw,
    /// Explicit pair couplings `couplings[d-1][a][b]` over `spins`;
    /// parameters `beta`, `B`.
    Custom {
        spins: Vec<f64>,
        couplings: Vec<Vec<Vec<f64>>>,
    },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Nn => "nn",
            ModelKind::Nnn => "nnn",
            ModelKind::Pbrw => "pbrw",
            ModelKind::Custom { .. } => "custom",
        }
    }

    /// Parameter names the model reads, in CSV column order.
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            ModelKind::Nn => &["beta", "J", "B"],
            ModelKind::Nnn => &["beta", "J1", "J2", "B"],
            ModelKind::Pbrw => &["p", "r"],
            ModelKind::Custom { .. } => &["beta", "B"],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SweepConfig {
    /// Independent draws per parameter; parameters not listed keep their
    /// fixed values.
    Random {
        points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        ranges: Vec<Range>,
    },
    /// Cartesian product, last axis varying fastest.
    Grid { axes: Vec<Axis> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub nats: bool,
    /// Machine graphs over single spins instead of blocks.
    #[serde(default)]
    pub spin: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge_tolerance: Option<f64>,
}

impl Config {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn for_model(kind: ModelKind) -> Self {
        Config {
            model: ModelConfig {
                kind,
                ground_state: false,
            },
            parameters: BTreeMap::new(),
            sweep: None,
            output: OutputConfig::default(),
        }
    }

    /// Applies `NAME=VALUE` overrides.
    pub fn set_params(&mut self, assignments: &[String]) -> Result<(), CliError> {
        for a in assignments {
            let (name, value) = a
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--param expects NAME=VALUE, got {a:?}")))?;
            let value: f64 = value.trim().parse().map_err(|_| {
                CliError::Usage(format!("--param {name}: {value:?} is not a number"))
            })?;
            self.parameters.insert(name.trim().to_string(), value);
        }
        Ok(())
    }

    pub fn param(&self, name: &str) -> Result<f64, CliError> {
        self.parameters.get(name).copied().ok_or_else(|| {
            CliError::Usage(format!(
                "parameter {name} is required for model {}",
                self.model.kind.name()
            ))
        })
    }

    /// Explicit sweep, or the model's default one.
    pub fn sweep_or_default(&self) -> SweepConfig {
        if let Some(s) = &self.sweep {
            return s.clone();
        }
        let range = |name: &str, lo, hi, scale| Range {
            name: name.into(),
            lo,
            hi,
            scale,
        };
        let axis = |name: &str, lo, hi, count| Axis {
            name: name.into(),
            lo,
            hi,
            count,
            scale: Scale::Linear,
        };
        match self.model.kind {
            ModelKind::Nn | ModelKind::Custom { .. } => SweepConfig::Random {
                points: 100_000,
                seed: None,
                ranges: vec![
                    range("beta", 1e-4, 1e2, Scale::Log),
                    range("J", -1.5, 1.5, Scale::Linear),
                    range("B", -3.0, 3.0, Scale::Linear),
                ],
            },
            ModelKind::Nnn => SweepConfig::Grid {
                axes: vec![axis("J1", -2.0, 2.0, 41), axis("J2", -2.0, 2.0, 41)],
            },
            ModelKind::Pbrw => SweepConfig::Grid {
                axes: vec![axis("r", 0.01, 0.99, 99), axis("p", 0.01, 0.99, 99)],
            },
        }
    }
}
