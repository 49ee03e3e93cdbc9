use serde::{Deserialize, Serialize};

use super::surrogate::{Surrogate, Truncation};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Fixed (non-learned) constants of one spiking layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronParams {
    /// Leak conductance, `1/τ_m`.
    pub g_l: f64,
    /// Synaptic trace time constant.
    pub tau_s: f64,
    pub dt: f64,
    pub theta: f64,
    /// Keep the `g_l` term inside the DGN decay factor.
    pub static_gate: bool,
    /// Keep the `Σ C·D` term inside the DGN decay factor.
    pub dynamic_gate: bool,
    pub truncation: Truncation,
    pub surrogate: Surrogate,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            g_l: 0.01,
            tau_s: 1.0,
            dt: 1.0,
            theta: 1.0,
            static_gate: true,
            dynamic_gate: true,
            truncation: Truncation::Sigmoid,
            surrogate: Surrogate::default(),
        }
    }
}

impl NeuronParams {
    /// Parameters from a membrane time constant, with `g_l = 1/τ_m`.
    pub fn from_tau_m(tau_m: f64, tau_s: f64, theta: f64) -> Self {
        Self {
            g_l: 1.0 / tau_m,
            tau_s,
            theta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("g_l", self.g_l)?;
        positive("tau_s", self.tau_s)?;
        positive("dt", self.dt)?;
        positive("theta", self.theta)?;
        positive("surrogate.width", self.surrogate.width)?;
        Ok(())
    }

    /// `e^{−Δt/τ_s}`.
    #[inline]
    pub fn trace_decay(&self) -> f64 {
        (-self.dt / self.tau_s).exp()
    }

    /// Standard LIF membrane decay `e^{−g_l·Δt}`.
    #[inline]
    pub fn lif_decay(&self) -> f64 {
        (-self.g_l * self.dt).exp()
    }

    /// `g_l·Δt` when the static gate is on, else 0.
    #[inline]
    pub(crate) fn static_leak(&self) -> f64 {
        if self.static_gate {
            self.g_l * self.dt
        } else {
            0.0
        }
    }

    /// Scale applied to `Σ C·D` inside the decay pre-activation.
    #[inline]
    pub(crate) fn gate_scale(&self) -> f64 {
        if self.dynamic_gate {
            self.dt
        } else {
            0.0
        }
    }
}

/// Threshold adaptation of the ALIF baseline: `θ_eff = θ + β·a`, where `a`
/// is a trace of the unit's own spikes with time constant `tau_a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlifParams {
    pub beta: f64,
    pub tau_a: f64,
}

impl Default for AlifParams {
    fn default() -> Self {
        Self {
            beta: 0.2,
            tau_a: 20.0,
        }
    }
}

impl AlifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidParam {
                name: "beta",
                reason: format!("must be >= 0, got {}", self.beta),
            });
        }
        positive("tau_a", self.tau_a)
    }

    #[inline]
    pub fn decay(&self, dt: f64) -> f64 {
        (-dt / self.tau_a).exp()
    }
}

/// All parameters of one DGN layer: input-current weights `W`, conductance
/// weights `C` (both `units × inputs`) and the fixed neuron constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgnLayerParams {
    pub w: Matrix,
    pub c: Matrix,
    pub neuron: NeuronParams,
}

impl DgnLayerParams {
    pub fn new(w: Matrix, c: Matrix, neuron: NeuronParams) -> Result<Self> {
        if w.shape() != c.shape() {
            return Err(Error::InvalidParam {
                name: "C",
                reason: format!("shape {:?} differs from W {:?}", c.shape(), w.shape()),
            });
        }
        neuron.validate()?;
        Ok(Self { w, c, neuron })
    }

    pub fn units(&self) -> usize {
        self.w.rows()
    }

    pub fn inputs(&self) -> usize {
        self.w.cols()
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            name,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}
