//! Reverse-mode adjoint sweep over the unrolled network.
//!
//! Conventions shared with the closed-form path: `dz/dV := Ψ`, the
//! Heaviside contributes nothing else, and `Ψ` itself is treated as a
//! constant of the cache.

use crate::error::{check_len, Error, Result};
use crate::matrix::Matrix;
use crate::network::{ForwardCache, GradientSet, LayerSpec, LayerWeights, Network, NeuronKind};
use crate::neuron::StepRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BackwardOptions {
    /// Propagate trace adjoints through the conductance gate `C`. Turning it
    /// off keeps only the current (`W`) path for input adjoints.
    pub conductance_path: bool,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            conductance_path: true,
        }
    }
}

pub(crate) fn check_cache(cache: &ForwardCache, net: &Network, dl_dy: &[f64]) -> Result<()> {
    let cfg = &net.config;
    check_len("dL/dy_pred", cfg.readout_dim, dl_dy.len())?;
    if cache.layers.len() != cfg.layers.len() {
        return Err(Error::Cache(format!(
            "{} layer records for {} layers",
            cache.layers.len(),
            cfg.layers.len()
        )));
    }
    let t_len = cache.timesteps();
    if t_len == 0 {
        return Err(Error::Cache("empty horizon".into()));
    }
    for (l, recs) in cache.layers.iter().enumerate() {
        if recs.len() != t_len {
            return Err(Error::Cache(format!("layer {l} has {} of {t_len} steps", recs.len())));
        }
        if let Some(r) = recs.iter().find(|r| r.psi.len() != cfg.layers[l].units) {
            return Err(Error::Cache(format!(
                "layer {l} surrogate values have length {}",
                r.psi.len()
            )));
        }
    }
    Ok(())
}

/// Readout gradient and the external spike adjoint `∂E/∂z_L^t` of the last layer.
pub(crate) fn readout_backward(
    cache: &ForwardCache,
    net: &Network,
    dl_dy: &[f64],
) -> (Matrix, Vec<Vec<f64>>) {
    let t_len = cache.timesteps();
    let inv_t = 1.0 / t_len as f64;
    let last = cache.layers.last().expect("at least one layer");
    let mut d_readout = Matrix::zeros(net.params.readout.rows(), net.params.readout.cols());
    for rec in last {
        for (k, &g) in dl_dy.iter().enumerate() {
            let row = d_readout.row_mut(k);
            for (r, &z) in row.iter_mut().zip(&rec.z) {
                *r += g * inv_t * z;
            }
        }
    }
    let scaled: Vec<f64> = dl_dy.iter().map(|g| g * inv_t).collect();
    let gz = net.params.readout.matvec_t(&scaled);
    (d_readout, vec![gz; t_len])
}

/// Adjoint sweep through one layer. Returns parameter gradients and the
/// adjoint of the layer's feedforward inputs at each step.
pub(crate) fn layer_backward(
    spec: &LayerSpec,
    weights: &LayerWeights,
    records: &[StepRecord],
    gz: &[Vec<f64>],
    ff_inputs: usize,
    opts: BackwardOptions,
) -> (LayerWeights, Vec<Vec<f64>>) {
    let n = &spec.neuron;
    let units = spec.units;
    let syn = weights.w.cols();
    let lam = n.trace_decay();
    let (beta, lam_a) = match spec.kind {
        NeuronKind::Alif => {
            let a = spec.alif.unwrap_or_default();
            (a.beta, a.decay(n.dt))
        }
        _ => (0.0, 0.0),
    };
    let gated = spec.kind == NeuronKind::Dgn;
    let gs = n.gate_scale();
    let mut dw = Matrix::zeros(units, syn);
    let mut dc = weights.c.as_ref().map(|c| Matrix::zeros(c.rows(), c.cols()));
    let t_len = records.len();
    let mut gin = vec![vec![0.0; ff_inputs]; t_len];

    let mut carry_v = vec![0.0; units];
    let mut carry_z = vec![0.0; units];
    let mut carry_a = vec![0.0; units];
    let mut carry_d = vec![0.0; syn];
    let mut a_v = vec![0.0; units];
    let mut a_pre = vec![0.0; units];
    let mut a_adapt = vec![0.0; units];

    for t in (0..t_len).rev() {
        let rec = &records[t];
        let v_prev = if t > 0 { Some(&records[t - 1].v) } else { None };
        for u in 0..units {
            let az = gz[t][u] + carry_z[u];
            a_v[u] = carry_v[u] + rec.psi[u] * az;
            a_adapt[u] = carry_a[u] - beta * rec.psi[u] * az;
            a_pre[u] = if gated {
                let vp = v_prev.map_or(0.0, |v| v[u]);
                a_v[u] * vp * n.truncation.derivative(rec.pre_activation[u])
            } else {
                0.0
            };
        }
        // Parameter gradients at step t.
        for u in 0..units {
            let gw = a_v[u] * n.dt;
            if gw != 0.0 {
                for (d, &tr) in dw.row_mut(u).iter_mut().zip(&rec.trace) {
                    *d += gw * tr;
                }
            }
            if let Some(dc) = dc.as_mut() {
                let gc = -gs * a_pre[u];
                if gc != 0.0 {
                    for (d, &tr) in dc.row_mut(u).iter_mut().zip(&rec.trace) {
                        *d += gc * tr;
                    }
                }
            }
        }
        // Trace adjoint: carried part plus this step's W and C uses.
        let mut a_d = carry_d.clone();
        for u in 0..units {
            let gw = a_v[u] * n.dt;
            if gw != 0.0 {
                for (a, &w) in a_d.iter_mut().zip(weights.w.row(u)) {
                    *a += gw * w;
                }
            }
            if opts.conductance_path {
                if let Some(c) = weights.c.as_ref() {
                    let gc = -gs * a_pre[u];
                    if gc != 0.0 {
                        for (a, &cv) in a_d.iter_mut().zip(c.row(u)) {
                            *a += gc * cv;
                        }
                    }
                }
            }
        }
        gin[t].copy_from_slice(&a_d[..ff_inputs]);
        for u in 0..units {
            carry_v[u] = rec.rho[u] * a_v[u];
            carry_z[u] = -n.theta * a_v[u] + a_adapt[u];
            if spec.recurrent {
                carry_z[u] += a_d[ff_inputs + u];
            }
            carry_a[u] = lam_a * a_adapt[u];
        }
        for (c, a) in carry_d.iter_mut().zip(&a_d) {
            *c = lam * a;
        }
    }
    (LayerWeights { w: dw, c: dc }, gin)
}

/// Full gradient of the loss by a reverse sweep, given `dL/dy_pred`.
pub fn bptt_reverse_mode(cache: &ForwardCache, dl_dy: &[f64], net: &Network) -> Result<GradientSet> {
    Ok(reverse_with_input(cache, dl_dy, net, BackwardOptions::default())?.0)
}

/// Reverse sweep returning parameter gradients and the input adjoint
/// (`T × input_channels`).
pub fn reverse_with_input(
    cache: &ForwardCache,
    dl_dy: &[f64],
    net: &Network,
    opts: BackwardOptions,
) -> Result<(GradientSet, Vec<Vec<f64>>)> {
    check_cache(cache, net, dl_dy)?;
    let cfg = &net.config;
    let (d_readout, mut gz) = readout_backward(cache, net, dl_dy);
    let mut layers = Vec::with_capacity(cfg.layers.len());
    for l in (0..cfg.layers.len()).rev() {
        let (g, gin) = layer_backward(
            &cfg.layers[l],
            &net.params.layers[l],
            &cache.layers[l],
            &gz,
            cfg.feedforward_inputs(l),
            opts,
        );
        layers.push(g);
        gz = gin;
    }
    layers.reverse();
    Ok((
        GradientSet {
            layers,
            readout: d_readout,
        },
        gz,
    ))
}
