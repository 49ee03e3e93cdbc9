//! Experiment configuration files.
//!
//! A config is one JSON object. Every section is optional; each subcommand
//! reads the sections it needs and fills the rest from the named preset.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use dgn_core::data::{BinMode, SynthSpec};
use dgn_core::network::{NetworkConfig, NeuronKind};
use dgn_core::perturb::{PerturbationKind, PerturbationSpec};
use dgn_core::stability::StabilityConfig;
use dgn_core::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Hidden-layer neuron model when the network comes from a preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<NeuronKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradcheck: Option<GradcheckSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Generated pattern task; split 0 trains, split 1 evaluates.
    Synthetic {
        #[serde(default)]
        spec: SynthSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_samples_per_class: Option<usize>,
    },
    /// On-disk dataset in the portable event format.
    Manifest {
        path: PathBuf,
        #[serde(default = "one")]
        bin_ms: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_steps: Option<usize>,
        #[serde(default)]
        bin_mode: BinMode,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSection {
    /// `reference-points` adds the six reference settings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub specs: Vec<PerturbationSpec>,
    #[serde(default)]
    pub grids: Vec<Grid>,
}

/// One kind swept over `values` (`p` for noise, `epsilon` for attacks).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub kind: PerturbationKind,
    pub values: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_factor")]
    pub mixed_factor: f64,
}

fn default_alpha() -> f64 {
    0.01
}

fn default_k() -> usize {
    4
}

fn default_factor() -> f64 {
    dgn_core::perturb::DEFAULT_MIXED_FACTOR
}

impl Grid {
    pub fn expand(&self, seed: u64) -> Vec<PerturbationSpec> {
        self.values
            .iter()
            .map(|&v| {
                let mut s = if self.kind.is_attack() {
                    PerturbationSpec::iterative(self.kind, v, self.alpha, self.k, seed)
                } else {
                    PerturbationSpec::noise(self.kind, v, seed)
                };
                s.mixed_factor = self.mixed_factor;
                s
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    /// Explicit configs. When empty a random sweep is generated.
    #[serde(default)]
    pub configs: Vec<StabilityConfig>,
    #[serde(default = "default_sweep")]
    pub sweep_size: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "yes")]
    pub monte_carlo: bool,
    /// Fail (exit 1) when any Monte Carlo DGN variance deviates from the
    /// analytic value by more than this fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn default_sweep() -> usize {
    10
}

fn default_trials() -> usize {
    10_000
}

fn yes() -> bool {
    true
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            configs: Vec::new(),
            sweep_size: default_sweep(),
            trials: default_trials(),
            monte_carlo: true,
            tolerance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSection {
    #[serde(default = "default_networks")]
    pub networks: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_dual_tol")]
    pub dual_tolerance: f64,
    #[serde(default = "default_fd_tol")]
    pub fd_tolerance: f64,
    /// Magnitude below which finite-difference errors are measured
    /// absolutely.
    #[serde(default = "default_fd_floor")]
    pub fd_floor: f64,
}

fn default_networks() -> usize {
    20
}

fn default_fd_step() -> f64 {
    1e-5
}

fn default_dual_tol() -> f64 {
    1e-10
}

fn default_fd_tol() -> f64 {
    1e-5
}

fn default_fd_floor() -> f64 {
    1e-5
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            networks: default_networks(),
            fd_step: default_fd_step(),
            dual_tolerance: default_dual_tol(),
            fd_tolerance: default_fd_tol(),
            fd_floor: default_fd_floor(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn default_synthetic() -> DataSource {
    DataSource::Synthetic {
        spec: SynthSpec::default(),
        test_samples_per_class: None,
    }
}
