//! Forward-accumulated BPTT.
//!
//! For a feedforward DGN or LIF layer the membrane sensitivities obey
//!
//! ```text
//! dV^t/dW_i = (ρ^t − θΨ^{t−1})·dV^{t−1}/dW_i + Δt·D_i^t
//! dV^t/dC_i = (ρ^t − θΨ^{t−1})·dV^{t−1}/dC_i − f′·Δt·V^{t−1}·D_i^t
//! ```
//!
//! with `f′ = φ′(pre_activation^t)`, and the weight gradient is
//! `Σ_t ∂E/∂z^t · Ψ^t · dV^t/dθ`, where `∂E/∂z^t` is the direct credit the
//! layer's output receives from above. The reset path is already inside the
//! sensitivities through the `−θΨ^{t−1}` factor, so it must not be added a
//! second time on the credit side.
//!
//! Recurrent and ALIF layers couple units through their own spikes; their
//! sensitivities are propagated per parameter by [`tangent_sweep`], the same
//! recursion extended with the recurrent-trace and adaptation tangents.
//! Credit for lower layers comes from tangents seeded at each input element.

use super::reverse::{check_cache, readout_backward};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::network::{ForwardCache, GradientSet, LayerSpec, LayerWeights, Network, NeuronKind};
use crate::neuron::StepRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    W { unit: usize, synapse: usize },
    C { unit: usize, synapse: usize },
    Input { channel: usize, step: usize },
}

/// Gradient by forward sensitivity recursions, given `dL/dy_pred`.
pub fn bptt_closed_form(cache: &ForwardCache, dl_dy: &[f64], net: &Network) -> Result<GradientSet> {
    check_cache(cache, net, dl_dy)?;
    let cfg = &net.config;
    let (d_readout, mut gz) = readout_backward(cache, net, dl_dy);
    let mut layers = Vec::with_capacity(cfg.layers.len());
    for l in (0..cfg.layers.len()).rev() {
        let spec = &cfg.layers[l];
        let weights = &net.params.layers[l];
        let records = &cache.layers[l];
        let grads = if !spec.recurrent && spec.kind != NeuronKind::Alif {
            feedforward_sensitivities(spec, weights, records, &gz)
        } else {
            per_parameter_sensitivities(spec, weights, records, &gz)
        };
        layers.push(grads);
        if l > 0 {
            gz = input_credit(spec, weights, records, &gz, cfg.feedforward_inputs(l));
        }
    }
    layers.reverse();
    Ok(GradientSet {
        layers,
        readout: d_readout,
    })
}

fn feedforward_sensitivities(
    spec: &LayerSpec,
    weights: &LayerWeights,
    records: &[StepRecord],
    gz: &[Vec<f64>],
) -> LayerWeights {
    let n = &spec.neuron;
    let units = spec.units;
    let syn = weights.w.cols();
    let gated = spec.kind == NeuronKind::Dgn;
    let gs = n.gate_scale();
    let mut s_w = Matrix::zeros(units, syn);
    let mut s_c = Matrix::zeros(units, syn);
    let mut dw = Matrix::zeros(units, syn);
    let mut dc = weights.c.as_ref().map(|_| Matrix::zeros(units, syn));
    for (t, rec) in records.iter().enumerate() {
        let prev = if t > 0 { Some(&records[t - 1]) } else { None };
        for u in 0..units {
            let psi_prev = prev.map_or(0.0, |p| p.psi[u]);
            let v_prev = prev.map_or(0.0, |p| p.v[u]);
            let factor = rec.rho[u] - n.theta * psi_prev;
            let credit = gz[t][u] * rec.psi[u];
            let sw = s_w.row_mut(u);
            let dw_row = dw.row_mut(u);
            for k in 0..syn {
                sw[k] = factor * sw[k] + n.dt * rec.trace[k];
                dw_row[k] += credit * sw[k];
            }
            if let (true, Some(dc)) = (gated, dc.as_mut()) {
                let f_prime = n.truncation.derivative(rec.pre_activation[u]);
                let drive = -f_prime * gs * v_prev;
                let sc = s_c.row_mut(u);
                let dc_row = dc.row_mut(u);
                for k in 0..syn {
                    sc[k] = factor * sc[k] + drive * rec.trace[k];
                    dc_row[k] += credit * sc[k];
                }
            }
        }
    }
    LayerWeights { w: dw, c: dc }
}

fn per_parameter_sensitivities(
    spec: &LayerSpec,
    weights: &LayerWeights,
    records: &[StepRecord],
    gz: &[Vec<f64>],
) -> LayerWeights {
    let units = spec.units;
    let syn = weights.w.cols();
    let dw = Matrix::from_fn(units, syn, |unit, synapse| {
        tangent_sweep(spec, weights, records, gz, Direction::W { unit, synapse })
    });
    let dc = weights.c.as_ref().map(|_| {
        Matrix::from_fn(units, syn, |unit, synapse| {
            tangent_sweep(spec, weights, records, gz, Direction::C { unit, synapse })
        })
    });
    LayerWeights { w: dw, c: dc }
}

fn input_credit(
    spec: &LayerSpec,
    weights: &LayerWeights,
    records: &[StepRecord],
    gz: &[Vec<f64>],
    ff_inputs: usize,
) -> Vec<Vec<f64>> {
    (0..records.len())
        .map(|step| {
            (0..ff_inputs)
                .map(|channel| tangent_sweep(spec, weights, records, gz, Direction::Input { channel, step }))
                .collect()
        })
        .collect()
}

/// Propagate the tangent of one direction through the layer and return
/// `Σ_t Σ_u ∂E/∂z_u^t · dz_u^t`.
pub(crate) fn tangent_sweep(
    spec: &LayerSpec,
    weights: &LayerWeights,
    records: &[StepRecord],
    gz: &[Vec<f64>],
    dir: Direction,
) -> f64 {
    let n = &spec.neuron;
    let units = spec.units;
    let syn = weights.w.cols();
    let ff = syn - if spec.recurrent { units } else { 0 };
    let lam = n.trace_decay();
    let gated = spec.kind == NeuronKind::Dgn;
    let gs = n.gate_scale();
    let (beta, lam_a) = match spec.kind {
        NeuronKind::Alif => {
            let a = spec.alif.unwrap_or_default();
            (a.beta, a.decay(n.dt))
        }
        _ => (0.0, 0.0),
    };
    let start = match dir {
        Direction::Input { step, .. } => step,
        _ => 0,
    };
    let mut d_trace = vec![0.0; syn];
    let mut d_v = vec![0.0; units];
    let mut d_z = vec![0.0; units];
    let mut d_a = vec![0.0; units];
    let mut acc = 0.0;
    for t in start..records.len() {
        let rec = &records[t];
        let v_prev = if t > 0 { Some(&records[t - 1].v) } else { None };
        for d in d_trace.iter_mut() {
            *d *= lam;
        }
        if let Direction::Input { channel, step } = dir {
            if t == step {
                d_trace[channel] += 1.0;
            }
        }
        if spec.recurrent {
            for j in 0..units {
                d_trace[ff + j] += d_z[j];
            }
        }
        let mut next_z = vec![0.0; units];
        for u in 0..units {
            let mut current = crate::matrix::dot(weights.w.row(u), &d_trace);
            let mut conductance = match (gated, weights.c.as_ref()) {
                (true, Some(c)) => crate::matrix::dot(c.row(u), &d_trace),
                _ => 0.0,
            };
            match dir {
                Direction::W { unit, synapse } if unit == u => current += rec.trace[synapse],
                Direction::C { unit, synapse } if unit == u => conductance += rec.trace[synapse],
                _ => {}
            }
            let d_rho = if gated {
                -gs * conductance * n.truncation.derivative(rec.pre_activation[u])
            } else {
                0.0
            };
            let vp = v_prev.map_or(0.0, |v| v[u]);
            d_v[u] = d_rho * vp + rec.rho[u] * d_v[u] + n.dt * current - n.theta * d_z[u];
            d_a[u] = lam_a * d_a[u] + d_z[u];
            next_z[u] = rec.psi[u] * (d_v[u] - beta * d_a[u]);
            acc += gz[t][u] * next_z[u];
        }
        d_z = next_z;
    }
    acc
}
