//! Single-timestep updates of DGN, LIF and ALIF layers.

use serde::{Deserialize, Serialize};

use super::params::{AlifParams, DgnLayerParams, NeuronParams};
use crate::error::{check_len, Result};
use crate::matrix::{dot, Matrix};

/// How a layer turns membrane potential into output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeMode {
    /// `z = 1[V ≥ threshold]`.
    #[default]
    Heaviside,
    /// `z = primal(V − threshold)`, the antiderivative of the surrogate.
    /// Only meaningful for gradient checking.
    Smoothed,
}

/// Dynamic state carried between timesteps.
///
/// Synaptic traces are stored once per presynaptic channel. Every
/// postsynaptic unit sees the same presynaptic spikes, so the per-synapse
/// trace matrix has identical rows and the vector is its compressed form.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerState {
    pub trace: Vec<f64>,
    pub v: Vec<f64>,
    pub z_prev: Vec<f64>,
    /// ALIF adaptation trace; zero for the other kinds.
    pub adapt: Vec<f64>,
}

impl LayerState {
    pub fn new(units: usize, inputs: usize) -> Self {
        Self {
            trace: vec![0.0; inputs],
            v: vec![0.0; units],
            z_prev: vec![0.0; units],
            adapt: vec![0.0; units],
        }
    }

    /// Trace matrix with one row per postsynaptic unit.
    pub fn trace_matrix(&self) -> Matrix {
        let units = self.v.len();
        Matrix::from_fn(units, self.trace.len(), |_, c| self.trace[c])
    }
}

/// Everything one timestep produces that the backward passes need.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub trace: Vec<f64>,
    /// Argument of the truncation `φ`.
    pub pre_activation: Vec<f64>,
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub psi: Vec<f64>,
    /// Firing threshold in effect at this step.
    pub threshold: Vec<f64>,
}

/// `D_t = e^{−Δt/τ_s}·D_{t−1} + z_t`.
pub fn synapse_trace_step(d_prev: &[f64], z_in: &[f64], neuron: &NeuronParams) -> Result<Vec<f64>> {
    check_len("synapse trace", d_prev.len(), z_in.len())?;
    let decay = neuron.trace_decay();
    Ok(d_prev
        .iter()
        .zip(z_in)
        .map(|(d, z)| decay * d + z)
        .collect())
}

/// Decay factor `ρ = φ(1 − g_l·Δt − Δt·Σ C_i·D_i)` with the gate flags
/// applied. Returns `(ρ, pre_activation)`.
pub fn decay_factor(
    trace: &[f64],
    c: &Matrix,
    neuron: &NeuronParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("decay factor trace", c.cols(), trace.len())?;
    let leak = neuron.static_leak();
    let scale = neuron.gate_scale();
    let pre: Vec<f64> = (0..c.rows())
        .map(|u| {
            let conductance = if scale == 0.0 { 0.0 } else { dot(c.row(u), trace) };
            1.0 - leak - scale * conductance
        })
        .collect();
    let rho = pre.iter().map(|&a| neuron.truncation.apply(a)).collect();
    Ok((rho, pre))
}

/// `V_t = ρ·V_{t−1} + Δt·Σ W_i·D_i − θ·z_{t−1}`. No clamping.
pub fn membrane_step(
    v_prev: &[f64],
    rho: &[f64],
    trace: &[f64],
    z_out_prev: &[f64],
    w: &Matrix,
    neuron: &NeuronParams,
) -> Result<Vec<f64>> {
    check_len("membrane trace", w.cols(), trace.len())?;
    check_len("membrane units", w.rows(), v_prev.len())?;
    check_len("membrane rho", v_prev.len(), rho.len())?;
    check_len("membrane reset", v_prev.len(), z_out_prev.len())?;
    Ok((0..w.rows())
        .map(|u| {
            rho[u] * v_prev[u] + neuron.dt * dot(w.row(u), trace) - neuron.theta * z_out_prev[u]
        })
        .collect())
}

/// Spike generation at the fixed threshold `θ`. Fires when `V ≥ θ`.
pub fn fire(v: &[f64], neuron: &NeuronParams, mode: SpikeMode) -> (Vec<f64>, Vec<f64>) {
    let thresholds = vec![neuron.theta; v.len()];
    fire_at(v, &thresholds, neuron, mode)
}

pub(crate) fn fire_at(
    v: &[f64],
    thresholds: &[f64],
    neuron: &NeuronParams,
    mode: SpikeMode,
) -> (Vec<f64>, Vec<f64>) {
    let s = &neuron.surrogate;
    v.iter()
        .zip(thresholds)
        .map(|(&v, &thr)| {
            let x = v - thr;
            let z = match mode {
                SpikeMode::Heaviside => {
                    if v >= thr {
                        1.0
                    } else {
                        0.0
                    }
                }
                SpikeMode::Smoothed => s.primal(x),
            };
            (z, s.grad(x))
        })
        .unzip()
}

/// Decay rule selecting between the gated DGN factor and a fixed LIF decay.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Decay<'a> {
    Gated(&'a Matrix),
    Fixed(f64),
}

pub(crate) fn advance(
    state: &LayerState,
    z_in: &[f64],
    w: &Matrix,
    decay: Decay<'_>,
    neuron: &NeuronParams,
    alif: Option<&AlifParams>,
    mode: SpikeMode,
) -> Result<(LayerState, StepRecord)> {
    check_len("layer input", w.cols(), z_in.len())?;
    check_len("layer state trace", w.cols(), state.trace.len())?;
    check_len("layer state units", w.rows(), state.v.len())?;
    let units = w.rows();
    let trace = synapse_trace_step(&state.trace, z_in, neuron)?;
    let (rho, pre) = match decay {
        Decay::Gated(c) => decay_factor(&trace, c, neuron)?,
        Decay::Fixed(rho) => (vec![rho; units], vec![0.0; units]),
    };
    let v = membrane_step(&state.v, &rho, &trace, &state.z_prev, w, neuron)?;
    let (adapt, threshold) = match alif {
        Some(a) => {
            let lam = a.decay(neuron.dt);
            let adapt: Vec<f64> = state
                .adapt
                .iter()
                .zip(&state.z_prev)
                .map(|(a, z)| lam * a + z)
                .collect();
            let thr = adapt.iter().map(|x| neuron.theta + a.beta * x).collect();
            (adapt, thr)
        }
        None => (state.adapt.clone(), vec![neuron.theta; units]),
    };
    let (z, psi) = fire_at(&v, &threshold, neuron, mode);
    let next = LayerState {
        trace: trace.clone(),
        v: v.clone(),
        z_prev: z.clone(),
        adapt,
    };
    let record = StepRecord {
        trace,
        pre_activation: pre,
        rho,
        v,
        z,
        psi,
        threshold,
    };
    Ok((next, record))
}

/// One DGN timestep: trace update, gated decay, membrane update, firing.
/// The reset term uses the spike emitted on the previous step.
pub fn dgn_step(
    state: &LayerState,
    z_in: &[f64],
    params: &DgnLayerParams,
    mode: SpikeMode,
) -> Result<(LayerState, StepRecord)> {
    advance(
        state,
        z_in,
        &params.w,
        Decay::Gated(&params.c),
        &params.neuron,
        None,
        mode,
    )
}

/// One LIF timestep with the fixed decay `rho_m`, normally
/// [`NeuronParams::lif_decay`].
pub fn lif_step(
    state: &LayerState,
    z_in: &[f64],
    w: &Matrix,
    neuron: &NeuronParams,
    rho_m: f64,
    mode: SpikeMode,
) -> Result<(LayerState, StepRecord)> {
    advance(state, z_in, w, Decay::Fixed(rho_m), neuron, None, mode)
}

/// One ALIF timestep: LIF dynamics with threshold `θ + β·a_t`,
/// `a_t = e^{−Δt/τ_a}·a_{t−1} + z_{t−1}`. The soft reset subtracts the base θ.
pub fn alif_step(
    state: &LayerState,
    z_in: &[f64],
    w: &Matrix,
    neuron: &NeuronParams,
    alif: &AlifParams,
    mode: SpikeMode,
) -> Result<(LayerState, StepRecord)> {
    advance(
        state,
        z_in,
        w,
        Decay::Fixed(neuron.lif_decay()),
        neuron,
        Some(alif),
        mode,
    )
}
