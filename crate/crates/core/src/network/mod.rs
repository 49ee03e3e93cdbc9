//! Layered DGN/LIF/ALIF networks with a non-spiking averaged readout.

mod forward;

use serde::{Deserialize, Serialize};

pub use forward::{argmax, forward, loss, predict, ForwardCache, ReadoutResult};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neuron::{AlifParams, NeuronParams, SpikeMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronKind {
    Dgn,
    Lif,
    Alif,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub kind: NeuronKind,
    pub units: usize,
    /// Feed the layer's own previous-step spikes back as extra input
    /// channels, each with its own `W` and `C` column.
    #[serde(default)]
    pub recurrent: bool,
    pub neuron: NeuronParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alif: Option<AlifParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_channels: usize,
    pub readout_dim: usize,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub spike_mode: SpikeMode,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParam { name, reason });
        if self.input_channels == 0 {
            return bad("input_channels", "must be positive".into());
        }
        if self.readout_dim == 0 {
            return bad("readout_dim", "must be positive".into());
        }
        if self.layers.is_empty() {
            return bad("layers", "at least one spiking layer is required".into());
        }
        for spec in &self.layers {
            if spec.units == 0 {
                return bad("units", "must be positive".into());
            }
            spec.neuron.validate()?;
            if spec.kind == NeuronKind::Alif {
                spec.alif.unwrap_or_default().validate()?;
            }
        }
        Ok(())
    }

    /// Feedforward input width of layer `l`.
    pub fn feedforward_inputs(&self, l: usize) -> usize {
        if l == 0 {
            self.input_channels
        } else {
            self.layers[l - 1].units
        }
    }

    /// Column count of layer `l`'s weight matrices: feedforward inputs,
    /// followed by the layer's own units when recurrent.
    pub fn synapse_count(&self, l: usize) -> usize {
        let spec = &self.layers[l];
        self.feedforward_inputs(l) + if spec.recurrent { spec.units } else { 0 }
    }

    pub fn last_units(&self) -> usize {
        self.layers.last().map_or(0, |s| s.units)
    }
}

/// Learnable tensors of one layer. `c` exists only for DGN layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub w: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Matrix>,
}

/// All learnable tensors of a network. Gradients and optimizer moments
/// share this layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub layers: Vec<LayerWeights>,
    /// `W_L`, `readout_dim × last_units`.
    pub readout: Matrix,
}

pub type GradientSet = ParamSet;

impl ParamSet {
    pub fn zeros(config: &NetworkConfig) -> Self {
        let layers = config
            .layers
            .iter()
            .enumerate()
            .map(|(l, spec)| {
                let shape = (spec.units, config.synapse_count(l));
                LayerWeights {
                    w: Matrix::zeros(shape.0, shape.1),
                    c: (spec.kind == NeuronKind::Dgn).then(|| Matrix::zeros(shape.0, shape.1)),
                }
            })
            .collect();
        Self {
            layers,
            readout: Matrix::zeros(config.readout_dim, config.last_units()),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|m| m.fill(0.0));
        z
    }

    /// Tensors in a fixed order: per layer `W` then `C`, readout last.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.w);
            if let Some(c) = &l.c {
                out.push(c);
            }
        }
        out.push(&self.readout);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.w);
            if let Some(c) = &mut l.c {
                out.push(c);
            }
        }
        out.push(&mut self.readout);
        out
    }

    /// Names matching [`ParamSet::tensors`], e.g. `layer0.W`, `readout`.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push(format!("layer{i}.W"));
            if l.c.is_some() {
                out.push(format!("layer{i}.C"));
            }
        }
        out.push("readout".to_string());
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|m| m.as_slice().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add_assign(&mut self, other: &ParamSet) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.tensors_mut().into_iter().for_each(|m| m.scale(k));
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors().iter().fold(0.0, |m, t| m.max(t.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn same_layout(&self, other: &ParamSet) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.shape() == y.shape())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub config: NetworkConfig,
    pub params: ParamSet,
    /// Seed used to draw the initial weights.
    pub seed: u64,
}

impl Network {
    pub fn new(config: NetworkConfig, params: ParamSet, seed: u64) -> Result<Self> {
        config.validate()?;
        let expected = ParamSet::zeros(&config);
        if !expected.same_layout(&params) {
            return Err(Error::InvalidParam {
                name: "params",
                reason: "tensor shapes do not match the network config".into(),
            });
        }
        Ok(Self {
            config,
            params,
            seed,
        })
    }

    /// Network with all-zero weights.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        let params = ParamSet::zeros(&config);
        Self::new(config, params, 0)
    }
}
