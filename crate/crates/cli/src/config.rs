use std::path::{Path, PathBuf};

use fracheat_core::asymptotics::{ScenarioId, ScenarioSpec};
use fracheat_core::fields::{InitialDatum, Route};
use fracheat_core::kernel::BuildMethod;
use fracheat_core::{Error, ModelParams, NormSpec, RadialGrid, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criteria::Criterion;

/// Radial grid descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "spacing", rename_all = "snake_case")]
pub enum GridSpec {
    Uniform { r_min: f64, r_max: f64, nodes: usize },
    Logarithmic { r_min: f64, r_max: f64, nodes: usize },
}

impl GridSpec {
    pub fn build(&self, dim: u32) -> Result<RadialGrid> {
        match *self {
            GridSpec::Uniform { r_min, r_max, nodes } => {
                RadialGrid::uniform_between(r_min, r_max, nodes, dim)
            }
            GridSpec::Logarithmic { r_min, r_max, nodes } => {
                RadialGrid::logarithmic(r_min, r_max, nodes, dim)
            }
        }
    }
}

fn default_method() -> BuildMethod {
    BuildMethod::Direct
}

fn default_verbosity() -> u8 {
    1
}

/// Everything a subcommand needs. Every key is optional in the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(default = "default_method")]
    pub method: BuildMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<InitialDatum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    /// Empty means the route suited to the datum.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub routes: Vec<Route>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<Criterion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Jitter seed for λ-sweeps; recorded for reproducibility.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_verbosity")]
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: None,
            method: default_method(),
            datum: None,
            grid: None,
            times: Vec::new(),
            routes: Vec::new(),
            scenarios: Vec::new(),
            criteria: Vec::new(),
            out: None,
            seed: 0,
            verbosity: default_verbosity(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::domain(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::domain(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn params_or_default(&self) -> ModelParams {
        self.params
            .unwrap_or_else(|| ModelParams::new(0.5, 0.5, 1).expect("valid default"))
    }

    /// The configured datum, or a unit Gaussian in the parameter dimension.
    pub fn datum_for(&self, params: &ModelParams) -> Result<InitialDatum> {
        match &self.datum {
            Some(d) if d.dim() != params.dim() => Err(Error::domain(format!(
                "datum lives in N={} but the parameters have N={}",
                d.dim(),
                params.dim()
            ))),
            Some(d) => Ok(d.clone()),
            None => InitialDatum::gaussian(1.0, params.dim()),
        }
    }
}

pub const PRESET_NAMES: [&str; 14] = [
    "AC1", "AC2", "AC3", "AC4", "AC5", "AC6", "AC7", "AC8", "AC9", "AC10", "AC11", "AC12",
    "AC13", "paper-map",
];

fn criteria(list: &[Criterion]) -> RunConfig {
    RunConfig {
        criteria: list.to_vec(),
        ..RunConfig::default()
    }
}

fn scenarios(ids: &[ScenarioId]) -> Result<RunConfig> {
    Ok(RunConfig {
        scenarios: ids
            .iter()
            .map(|id| ScenarioSpec::preset(*id))
            .collect::<Result<_>>()?,
        ..RunConfig::default()
    })
}

/// Shipped configurations, one per acceptance criterion plus the full
/// scenario suite.
pub fn preset(name: &str) -> Result<RunConfig> {
    use Criterion::*;
    let cfg = match name {
        "AC1" => criteria(&[Ac1]),
        "AC2" => criteria(&[Ac2]),
        "AC3" => criteria(&[Ac3]),
        "AC4" => RunConfig {
            params: Some(ModelParams::new(1.0, 0.5, 1)?),
            ..criteria(&[Ac4])
        },
        "AC5" => RunConfig {
            params: Some(ModelParams::new(0.5, 0.5, 3)?),
            ..criteria(&[Ac5])
        },
        "AC6" => criteria(&[Ac6]),
        "AC7" => RunConfig {
            params: Some(ModelParams::new(0.5, 0.5, 1)?),
            datum: Some(InitialDatum::gaussian(1.0, 1)?),
            grid: Some(GridSpec::Uniform {
                r_min: 0.0,
                r_max: 10.0,
                nodes: 201,
            }),
            times: vec![1.0, 16.0, 256.0],
            routes: vec![Route::Fourier, Route::Convolution],
            ..criteria(&[Ac7])
        },
        "AC8" => {
            let mut cfg = scenarios(&[ScenarioId::CharacteristicLp, ScenarioId::CharacteristicLp])?;
            cfg.scenarios[0].norm = NormSpec::strong(1.0)?;
            cfg
        }
        "AC9" => scenarios(&[ScenarioId::CompactSupercritical])?,
        "AC10" => scenarios(&[ScenarioId::CompactCritical1d])?,
        "AC11" => scenarios(&[ScenarioId::CompactSubcritical1d])?,
        "AC12" => scenarios(&[ScenarioId::FastMatched, ScenarioId::FarTail])?,
        "AC13" => criteria(&[Ac13]),
        "paper-map" => scenarios(&ScenarioId::ALL)?,
        _ => {
            return Err(Error::domain(format!(
                "unknown preset {name:?}; known: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}
