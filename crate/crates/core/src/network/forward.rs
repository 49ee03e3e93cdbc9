use super::{LayerSpec, Network, NeuronKind};
use crate::data::SpikeTensor;
use crate::error::{check_len, Error, Result};
use crate::matrix::Matrix;
use crate::neuron::{advance, Decay, LayerState, SpikeMode, StepRecord};

/// The unrolled forward pass of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardCache {
    /// Input columns `x^t`, `T × input_channels`.
    pub inputs: Vec<Vec<f64>>,
    /// `layers[l][t]`.
    pub layers: Vec<Vec<StepRecord>>,
    /// Readout `o_t = W_L z_L^t`, `T × readout_dim`.
    pub outputs: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn timesteps(&self) -> usize {
        self.inputs.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutResult {
    pub o: Vec<Vec<f64>>,
    /// `(1/T) Σ_t o_t`.
    pub y_pred: Vec<f64>,
    pub loss: Option<f64>,
}

pub(crate) fn layer_step(
    spec: &LayerSpec,
    w: &Matrix,
    c: Option<&Matrix>,
    state: &LayerState,
    input: &[f64],
    mode: SpikeMode,
) -> Result<(LayerState, StepRecord)> {
    let n = &spec.neuron;
    match spec.kind {
        NeuronKind::Dgn => {
            let c = c.ok_or_else(|| Error::InvalidParam {
                name: "C",
                reason: "DGN layer without conductance weights".into(),
            })?;
            advance(state, input, w, Decay::Gated(c), n, None, mode)
        }
        NeuronKind::Lif => advance(state, input, w, Decay::Fixed(n.lif_decay()), n, None, mode),
        NeuronKind::Alif => {
            let a = spec.alif.unwrap_or_default();
            advance(state, input, w, Decay::Fixed(n.lif_decay()), n, Some(&a), mode)
        }
    }
}

/// Run every layer over all `T` steps from the zero initial state and
/// apply the averaged linear readout.
pub fn forward(net: &Network, x: &SpikeTensor) -> Result<(ReadoutResult, ForwardCache)> {
    let cfg = &net.config;
    check_len("network input channels", cfg.input_channels, x.channels())?;
    let t_len = x.timesteps();
    let inputs: Vec<Vec<f64>> = (0..t_len).map(|t| x.column(t)).collect();
    let mut layers = Vec::with_capacity(cfg.layers.len());
    let mut below: Vec<Vec<f64>> = inputs.clone();
    for (l, spec) in cfg.layers.iter().enumerate() {
        let weights = &net.params.layers[l];
        let mut state = LayerState::new(spec.units, cfg.synapse_count(l));
        let mut records = Vec::with_capacity(t_len);
        for (t, col) in below.iter().enumerate() {
            let input = if spec.recurrent {
                let mut u = col.clone();
                u.extend_from_slice(&state.z_prev);
                u
            } else {
                col.clone()
            };
            let (next, rec) = layer_step(spec, &weights.w, weights.c.as_ref(), &state, &input, cfg.spike_mode)?;
            if rec.v.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l, timestep: t });
            }
            state = next;
            records.push(rec);
        }
        below = records.iter().map(|r| r.z.clone()).collect();
        layers.push(records);
    }
    let outputs: Vec<Vec<f64>> = below.iter().map(|z| net.params.readout.matvec(z)).collect();
    let y_pred = mean_rows(&outputs, cfg.readout_dim);
    Ok((
        ReadoutResult {
            o: outputs.clone(),
            y_pred,
            loss: None,
        },
        ForwardCache {
            inputs,
            layers,
            outputs,
        },
    ))
}

pub(crate) fn mean_rows(rows: &[Vec<f64>], width: usize) -> Vec<f64> {
    let mut acc = vec![0.0; width];
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
    }
    if !rows.is_empty() {
        let inv = 1.0 / rows.len() as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
    }
    acc
}

/// Softmax cross-entropy of `y_pred` against `label`, with its gradient.
pub fn loss(y_pred: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= y_pred.len() {
        return Err(Error::InvalidParam {
            name: "label",
            reason: format!("{label} >= class count {}", y_pred.len()),
        });
    }
    let m = y_pred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = y_pred.iter().map(|y| (y - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let value = z.ln() + m - y_pred[label];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / z).collect();
    grad[label] -= 1.0;
    Ok((value, grad))
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate() {
        if v > y[best] {
            best = i;
        }
    }
    best
}

pub fn predict(net: &Network, x: &SpikeTensor) -> Result<usize> {
    let (out, _) = forward(net, x)?;
    Ok(argmax(&out.y_pred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{LayerSpec, NetworkConfig, ParamSet};
    use crate::neuron::NeuronParams;

    fn single_layer(units: usize, inputs: usize, classes: usize) -> NetworkConfig {
        NetworkConfig {
            input_channels: inputs,
            readout_dim: classes,
            layers: vec![LayerSpec {
                kind: NeuronKind::Dgn,
                units,
                recurrent: false,
                neuron: NeuronParams::default(),
                alif: None,
            }],
            spike_mode: SpikeMode::Heaviside,
        }
    }

    #[test]
    fn silent_input_gives_zero_readout() {
        let cfg = single_layer(3, 2, 4);
        let mut p = ParamSet::zeros(&cfg);
        p.layers[0].w.fill(0.5);
        p.readout.fill(1.0);
        let net = Network::new(cfg, p, 0).unwrap();
        let (out, cache) = forward(&net, &SpikeTensor::zeros(2, 7)).unwrap();
        assert!(out.o.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(out.y_pred, vec![0.0; 4]);
        assert_eq!(cache.layers[0].len(), 7);
        assert_eq!(predict(&net, &SpikeTensor::zeros(2, 7)).unwrap(), 0);
    }

    #[test]
    fn forced_spikes_average_through_readout() {
        // One unit driven hard at t=0 and t=2 fires on those steps; silent
        // at t=1 because of the reset. Readout weights [2, -1].
        let mut cfg = single_layer(1, 1, 2);
        cfg.layers[0].neuron.tau_s = 0.01;
        cfg.layers[0].neuron.truncation = crate::neuron::Truncation::HardClamp01;
        cfg.layers[0].neuron.g_l = 1.0;
        let mut p = ParamSet::zeros(&cfg);
        p.layers[0].w.fill(5.0);
        p.readout = Matrix::from_vec(2, 1, vec![2.0, -1.0]).unwrap();
        let net = Network::new(cfg, p, 0).unwrap();
        let x = SpikeTensor::from_vec(1, 3, vec![1.0, 0.0, 1.0]).unwrap();
        let (out, cache) = forward(&net, &x).unwrap();
        let z: Vec<f64> = cache.layers[0].iter().map(|r| r.z[0]).collect();
        assert_eq!(z, vec![1.0, 0.0, 1.0]);
        assert!((out.y_pred[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((out.y_pred[1] + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn loss_examples() {
        let (l, _) = loss(&[0.3; 5], 2).unwrap();
        assert!((l - 5f64.ln()).abs() < 1e-14);
        let (l, _) = loss(&[0.0, 3.0, 0.0], 1).unwrap();
        assert!(l < 3f64.ln());
        assert!(loss(&[0.0, 1.0], 2).is_err());
    }

    #[test]
    fn loss_gradient_matches_central_differences() {
        let y = [0.3, -1.2, 0.8, 0.05];
        let (_, g) = loss(&y, 2).unwrap();
        let h = 1e-6;
        for i in 0..y.len() {
            let mut a = y;
            let mut b = y;
            a[i] += h;
            b[i] -= h;
            let fd = (loss(&a, 2).unwrap().0 - loss(&b, 2).unwrap().0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn argmax_tie_break() {
        assert_eq!(argmax(&[0.2, 0.9, 0.1]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), 0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = Network::zeros(single_layer(2, 3, 2)).unwrap();
        assert!(forward(&net, &SpikeTensor::zeros(4, 5)).is_err());
    }

    #[test]
    fn nan_weights_are_caught_with_location() {
        let cfg = single_layer(2, 1, 2);
        let mut p = ParamSet::zeros(&cfg);
        p.layers[0].w.set(1, 0, f64::NAN);
        let net = Network::new(cfg, p, 0).unwrap();
        let x = SpikeTensor::from_vec(1, 3, vec![0.0, 1.0, 0.0]).unwrap();
        match forward(&net, &x) {
            Err(Error::NonFinite { layer, timestep }) => assert_eq!((layer, timestep), (0, 0)),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }
}
