//! Configuration file schema (TOML).
//!
//! See `docs/config.md` at the repository root for a field-by-field
//! description; `configs/*.toml` hold complete files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficient::Coefficient;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    /// Experiment name -> output file name (relative to the output directory).
    #[serde(default)]
    pub experiments: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub horizon: f64,
    pub p: f64,
    #[serde(default)]
    pub theta: f64,
    /// Declared lower bound for eta; defaults to the sampled minimum.
    #[serde(default)]
    pub kappa0: Option<f64>,
    pub domain: DomainConfig,
    pub initial: InitialConfig,
    pub factor: FactorConfig,
    pub costs: CostsConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub t0: f64,
    pub y0: Vec<f64>,
    pub x0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    /// Brownian dimension n; defaults to the number of diffusion columns.
    #[serde(default)]
    pub noise_dim: Option<usize>,
    pub drift: Vec<Coefficient>,
    /// Row-major d x n matrix.
    pub diffusion: Vec<Vec<Coefficient>>,
    #[serde(default)]
    pub drift_bound: Option<f64>,
    #[serde(default)]
    pub diffusion_bound: Option<f64>,
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub ellipticity: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsConfig {
    pub eta: Coefficient,
    #[serde(default = "zero_coefficient")]
    pub gamma: Coefficient,
    #[serde(default = "zero_coefficient")]
    pub lambda: Coefficient,
}

fn zero_coefficient() -> Coefficient {
    Coefficient::constant(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    #[serde(default = "default_mesh")]
    pub mesh_per_axis: usize,
    #[serde(default = "default_lip_tol")]
    pub lipschitz_tolerance: f64,
}

fn default_mesh() -> usize {
    41
}
fn default_lip_tol() -> f64 {
    1e-6
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            mesh_per_axis: default_mesh(),
            lipschitz_tolerance: default_lip_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Uniform time steps on [0, T] before the refinement near t = 0.
    pub nt: usize,
    /// Space nodes per axis; a single entry is broadcast to every axis.
    pub ny: Vec<usize>,
    pub refine_ratio: f64,
    pub refine_levels: usize,
    pub series_tol: f64,
    pub min_step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nt: 1000,
            ny: vec![41],
            refine_ratio: 0.5,
            refine_levels: 12,
            series_tol: 1e-12,
            min_step: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub steps: usize,
    /// Number of individual paths written by `simulate` (0 = none).
    pub dump_paths: usize,
    /// Optional piecewise-constant rate schedule for `compare-strategies`.
    pub rate_table: Option<RateTableConfig>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            seed: 20_240_601,
            steps: 1024,
            dump_paths: 0,
            rate_table: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTableConfig {
    pub times: Vec<f64>,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub path_steps: usize,
    /// Each probe is `[t, y_1, ..., y_d]`.
    pub probes: Vec<Vec<f64>>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            seed: 7,
            path_steps: 2000,
            probes: Vec::new(),
        }
    }
}

impl ProblemConfig {
    /// Constant cost coefficients on T = 1 with a driftless factor of
    /// volatility 0.2 on the box [-1, 1], starting at (0, 0, x0 = 1).
    pub fn constant_coefficients(eta: f64, gamma: f64, lambda: f64, theta: f64, p: f64) -> Self {
        ProblemConfig {
            horizon: 1.0,
            p,
            theta,
            kappa0: None,
            domain: DomainConfig {
                lower: vec![-1.0],
                upper: vec![1.0],
            },
            initial: InitialConfig {
                t0: 0.0,
                y0: vec![0.0],
                x0: 1.0,
            },
            factor: FactorConfig {
                noise_dim: None,
                drift: vec![Coefficient::constant(0.0)],
                diffusion: vec![vec![Coefficient::constant(0.2)]],
                drift_bound: None,
                diffusion_bound: None,
                lipschitz: None,
                ellipticity: None,
            },
            costs: CostsConfig {
                eta: Coefficient::constant(eta),
                gamma: Coefficient::constant(gamma),
                lambda: Coefficient::constant(lambda),
            },
            validation: ValidationConfig::default(),
        }
    }
}
