//! Named hyperparameter sets for the benchmark datasets and the synthetic
//! pattern task.

use serde::{Deserialize, Serialize};

use crate::network::{LayerSpec, NetworkConfig, NeuronKind};
use crate::neuron::{AlifParams, NeuronParams, SpikeMode};
use crate::training::{InitSpec, TrainConfig, UniformInit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: &'static str,
    pub tau_m: f64,
    pub tau_s: f64,
    pub theta: f64,
    pub init: InitSpec,
    pub hidden: usize,
    pub recurrent: bool,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

const fn init(c: f64, w: f64) -> InitSpec {
    InitSpec {
        c: UniformInit::new(c, c / 2.0),
        w: UniformInit::new(w, w / 2.0),
        readout: None,
    }
}

const fn bench(
    name: &'static str,
    tau_m: f64,
    tau_s: f64,
    init: InitSpec,
    hidden: usize,
    recurrent: bool,
    epochs: usize,
) -> Preset {
    Preset {
        name,
        tau_m,
        tau_s,
        theta: 1.0,
        init,
        hidden,
        recurrent,
        epochs,
        lr: 1e-3,
        batch_size: 16,
    }
}

pub const PRESETS: &[Preset] = &[
    bench("ti46-ff", 10.0, 2.0, init(0.01, 0.01), 100, false, 64),
    bench("ti46-rec", 15.0, 1.5, init(0.01, 0.01), 100, true, 64),
    bench("tidigits-ff", 100.0, 1.0, init(0.01, 0.001), 100, false, 64),
    bench("tidigits-rec", 10.0, 2.5, init(0.01, 0.01), 100, true, 64),
    bench("shd-ff", 1.0, 0.02, init(0.01, 0.01), 128, false, 128),
    bench("shd-rec", 1.0, 0.02, init(0.001, 0.001), 128, true, 128),
    bench("ssc-ff", 1.0, 0.02, init(0.01, 0.01), 128, false, 128),
    bench("ssc-rec", 1.0, 0.02, init(0.01, 0.01), 128, true, 128),
    Preset {
        name: "synthetic",
        tau_m: 10.0,
        tau_s: 2.0,
        theta: 1.0,
        init: init(0.01, 0.01),
        hidden: 16,
        recurrent: false,
        epochs: 50,
        lr: 1e-3,
        batch_size: 8,
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

impl Preset {
    pub fn neuron(&self) -> NeuronParams {
        NeuronParams::from_tau_m(self.tau_m, self.tau_s, self.theta)
    }

    /// One hidden layer of `kind` units between the inputs and the readout.
    pub fn network_config(&self, kind: NeuronKind, input_channels: usize, classes: usize) -> NetworkConfig {
        NetworkConfig {
            input_channels,
            readout_dim: classes,
            layers: vec![LayerSpec {
                kind,
                units: self.hidden,
                recurrent: self.recurrent,
                neuron: self.neuron(),
                alif: (kind == NeuronKind::Alif).then(AlifParams::default),
            }],
            spike_mode: SpikeMode::Heaviside,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            seed,
            init: self.init,
            ..TrainConfig::default()
        }
    }
}
