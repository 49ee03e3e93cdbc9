#![allow(dead_code)]

use dgn_core::data::SpikeTensor;
use dgn_core::network::{LayerSpec, Network, NetworkConfig, NeuronKind};
use dgn_core::neuron::{AlifParams, NeuronParams, SpikeMode, Surrogate, SurrogateKind};
use dgn_core::training::{init_network, InitSpec, UniformInit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct RandomNet {
    pub net: Network,
    pub x: SpikeTensor,
    pub label: usize,
}

pub fn neuron(rng: &mut ChaCha8Rng, surrogate: Surrogate) -> NeuronParams {
    NeuronParams {
        g_l: rng.random_range(0.05..0.3),
        tau_s: rng.random_range(1.0..4.0),
        theta: rng.random_range(0.5..1.5),
        surrogate,
        ..NeuronParams::default()
    }
}

pub fn binary_input(rng: &mut ChaCha8Rng, channels: usize, t: usize, rate: f64) -> SpikeTensor {
    let v = (0..channels * t)
        .map(|_| if rng.random::<f64>() < rate { 1.0 } else { 0.0 })
        .collect();
    SpikeTensor::from_vec(channels, t, v).unwrap()
}

/// Small network with weights large enough to make units fire.
pub fn random_net(seed: u64, kinds: &[NeuronKind], recurrent: Option<bool>, mode: SpikeMode, surrogate: Surrogate) -> RandomNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = rng.random_range(2..=6);
    let t = rng.random_range(3..=10);
    let n_layers = rng.random_range(1..=2);
    let layers = (0..n_layers)
        .map(|_| {
            let kind = kinds[rng.random_range(0..kinds.len())];
            LayerSpec {
                kind,
                units: rng.random_range(1..=8),
                recurrent: recurrent.unwrap_or_else(|| rng.random_bool(0.5)),
                neuron: neuron(&mut rng, surrogate),
                alif: (kind == NeuronKind::Alif).then(|| AlifParams {
                    beta: rng.random_range(0.05..0.5),
                    tau_a: rng.random_range(2.0..20.0),
                }),
            }
        })
        .collect();
    let config = NetworkConfig {
        input_channels: channels,
        readout_dim: rng.random_range(2..=4),
        layers,
        spike_mode: mode,
    };
    let init = InitSpec {
        c: UniformInit::new(0.15, 0.15),
        w: UniformInit::new(0.5, 0.7),
        readout: None,
    };
    let readout_dim = config.readout_dim;
    let net = init_network(config, &init, seed ^ 0x5eed).unwrap();
    let x = binary_input(&mut rng, channels, t, 0.5);
    RandomNet {
        net,
        x,
        label: rng.random_range(0..readout_dim),
    }
}

pub fn smooth_surrogate() -> Surrogate {
    Surrogate {
        kind: SurrogateKind::SigmoidDerivative,
        width: 0.5,
    }
}

pub const ALL_KINDS: [NeuronKind; 3] = [NeuronKind::Dgn, NeuronKind::Lif, NeuronKind::Alif];
