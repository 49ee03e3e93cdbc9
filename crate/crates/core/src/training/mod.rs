//! Gradients, optimisation and the training loop.

mod adam;
mod closed_form;
mod fd;
mod init;
mod reverse;
mod trainer;

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use closed_form::bptt_closed_form;
pub use fd::{
    finite_difference_grad, finite_difference_input_grad, max_relative_error, relative_error,
    FD_STEP_RANGE,
};
pub use init::{init_network, init_weights, InitSpec, UniformInit};
pub use reverse::{bptt_reverse_mode, reverse_with_input, BackwardOptions};
pub use trainer::{evaluate, train, EpochStats, History, TrainConfig};

use crate::data::SpikeTensor;
use crate::error::Result;
use crate::network::{argmax, forward, loss, GradientSet, Network};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    #[default]
    ReverseMode,
    ClosedForm,
}

/// Forward pass, loss and full gradient for one sample.
/// Returns `(loss, gradient, predicted class)`.
pub fn gradient(
    net: &Network,
    x: &SpikeTensor,
    label: usize,
    method: GradientMethod,
) -> Result<(f64, GradientSet, usize)> {
    let (out, cache) = forward(net, x)?;
    let (l, dl_dy) = loss(&out.y_pred, label)?;
    let g = match method {
        GradientMethod::ReverseMode => bptt_reverse_mode(&cache, &dl_dy, net)?,
        GradientMethod::ClosedForm => bptt_closed_form(&cache, &dl_dy, net)?,
    };
    Ok((l, g, argmax(&out.y_pred)))
}
