//! Central finite differences on the smoothed network.

use crate::data::SpikeTensor;
use crate::error::{Error, Result};
use crate::network::{forward, loss, GradientSet, Network};
use crate::neuron::SpikeMode;

pub const FD_STEP_RANGE: (f64, f64) = (1e-6, 1e-4);

fn check_smoothed(net: &Network, h: f64) -> Result<()> {
    if net.config.spike_mode != SpikeMode::Smoothed {
        return Err(Error::InvalidParam {
            name: "spike_mode",
            reason: "finite differences need the smoothed network".into(),
        });
    }
    if !(h >= FD_STEP_RANGE.0 && h <= FD_STEP_RANGE.1) {
        return Err(Error::InvalidParam {
            name: "h",
            reason: format!("{h} outside [{}, {}]", FD_STEP_RANGE.0, FD_STEP_RANGE.1),
        });
    }
    Ok(())
}

fn loss_of(net: &Network, x: &SpikeTensor, label: usize) -> Result<f64> {
    let (out, _) = forward(net, x)?;
    let (l, _) = loss(&out.y_pred, label)?;
    if !l.is_finite() {
        return Err(Error::NonFinite {
            layer: net.config.layers.len(),
            timestep: x.timesteps(),
        });
    }
    Ok(l)
}

/// `(L(θ+h) − L(θ−h)) / 2h` for every parameter.
pub fn finite_difference_grad(net: &Network, x: &SpikeTensor, label: usize, h: f64) -> Result<GradientSet> {
    check_smoothed(net, h)?;
    let mut probe = net.clone();
    let mut grad = net.params.zeros_like();
    let count = net.params.tensors().len();
    for ti in 0..count {
        let len = net.params.tensors()[ti].as_slice().len();
        for k in 0..len {
            let orig = net.params.tensors()[ti].as_slice()[k];
            probe.params.tensors_mut()[ti].as_mut_slice()[k] = orig + h;
            let up = loss_of(&probe, x, label)?;
            probe.params.tensors_mut()[ti].as_mut_slice()[k] = orig - h;
            let down = loss_of(&probe, x, label)?;
            probe.params.tensors_mut()[ti].as_mut_slice()[k] = orig;
            grad.tensors_mut()[ti].as_mut_slice()[k] = (up - down) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// Central differences with respect to every input element,
/// laid out `T × channels`.
pub fn finite_difference_input_grad(
    net: &Network,
    x: &SpikeTensor,
    label: usize,
    h: f64,
) -> Result<Vec<Vec<f64>>> {
    check_smoothed(net, h)?;
    let mut out = vec![vec![0.0; x.channels()]; x.timesteps()];
    let mut probe = x.clone();
    for c in 0..x.channels() {
        for t in 0..x.timesteps() {
            let orig = x.get(c, t);
            probe.set(c, t, orig + h);
            let up = loss_of(net, &probe, label)?;
            probe.set(c, t, orig - h);
            let down = loss_of(net, &probe, label)?;
            probe.set(c, t, orig);
            out[t][c] = (up - down) / (2.0 * h);
        }
    }
    Ok(out)
}

/// Largest elementwise relative error `|a − b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &GradientSet, b: &GradientSet, floor: f64) -> f64 {
    a.tensors()
        .iter()
        .zip(b.tensors())
        .flat_map(|(x, y)| x.as_slice().iter().zip(y.as_slice()))
        .map(|(p, q)| relative_error(*p, *q, floor))
        .fold(0.0, f64::max)
}

#[inline]
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
