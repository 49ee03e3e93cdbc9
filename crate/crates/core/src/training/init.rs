use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::network::{LayerWeights, Network, NetworkConfig, NeuronKind, ParamSet};
use crate::rng::seeded;
use crate::error::Result;

/// Uniform distribution on `[center − half_width, center + half_width]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformInit {
    pub center: f64,
    pub half_width: f64,
}

impl UniformInit {
    pub const fn new(center: f64, half_width: f64) -> Self {
        Self { center, half_width }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.half_width == 0.0 {
            return self.center;
        }
        self.center + self.half_width * (2.0 * rng.random::<f64>() - 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    /// Conductance weights `C`.
    pub c: UniformInit,
    /// Current weights `W`.
    pub w: UniformInit,
    /// Readout `W_L`; `None` means `±1/√units` around zero.
    #[serde(default)]
    pub readout: Option<UniformInit>,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            c: UniformInit::new(0.01, 0.005),
            w: UniformInit::new(0.01, 0.005),
            readout: None,
        }
    }
}

/// Draw `W` (all entries, row-major) and then `C`.
pub fn init_weights<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    c_spec: &UniformInit,
    w_spec: &UniformInit,
    rng: &mut R,
) -> (Matrix, Matrix) {
    let w = Matrix::from_fn(rows, cols, |_, _| w_spec.sample(rng));
    let c = Matrix::from_fn(rows, cols, |_, _| c_spec.sample(rng));
    (w, c)
}

/// Fresh network with weights drawn from `init` using `seed`.
pub fn init_network(config: NetworkConfig, init: &InitSpec, seed: u64) -> Result<Network> {
    config.validate()?;
    let mut rng = seeded(seed);
    let mut layers = Vec::with_capacity(config.layers.len());
    for (l, spec) in config.layers.iter().enumerate() {
        let (w, c) = init_weights(spec.units, config.synapse_count(l), &init.c, &init.w, &mut rng);
        layers.push(LayerWeights {
            w,
            c: (spec.kind == NeuronKind::Dgn).then_some(c),
        });
    }
    let units = config.last_units();
    let readout_init = init
        .readout
        .unwrap_or_else(|| UniformInit::new(0.0, 1.0 / (units as f64).sqrt()));
    let readout = Matrix::from_fn(config.readout_dim, units, |_, _| readout_init.sample(&mut rng));
    Network::new(config, ParamSet { layers, readout }, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shd_ff_range() {
        let mut rng = seeded(3);
        let spec = UniformInit::new(0.01, 0.005);
        let (w, c) = init_weights(50, 40, &spec, &spec, &mut rng);
        for v in w.as_slice().iter().chain(c.as_slice()) {
            assert!((0.005..=0.015).contains(v));
        }
    }

    #[test]
    fn zero_width_is_constant() {
        let mut rng = seeded(1);
        let (w, c) = init_weights(3, 3, &UniformInit::new(0.2, 0.0), &UniformInit::new(-0.1, 0.0), &mut rng);
        assert!(w.as_slice().iter().all(|&v| v == -0.1));
        assert!(c.as_slice().iter().all(|&v| v == 0.2));
    }

    #[test]
    fn empirical_mean_within_three_sigma() {
        let mut rng = seeded(11);
        let spec = UniformInit::new(0.01, 0.005);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| spec.sample(&mut rng)).sum::<f64>() / n as f64;
        let sd = 0.005 / 3f64.sqrt();
        assert!((mean - 0.01).abs() < 3.0 * sd / (n as f64).sqrt());
    }
}
