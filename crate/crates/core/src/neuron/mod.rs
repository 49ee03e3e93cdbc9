//! Single-neuron dynamics and their continuous-time references.

mod ode;
mod params;
mod step;
mod surrogate;

pub use ode::{ode_reference_conductance, ode_reference_dgn, OdeTrajectory, MAX_FINE_STEP_FRACTION};
pub use params::{AlifParams, DgnLayerParams, NeuronParams};
pub use step::{
    alif_step, decay_factor, dgn_step, fire, lif_step, membrane_step, synapse_trace_step,
    LayerState, SpikeMode, StepRecord,
};
pub(crate) use step::{advance, Decay};
pub use surrogate::{sigmoid, Surrogate, SurrogateKind, Truncation};
