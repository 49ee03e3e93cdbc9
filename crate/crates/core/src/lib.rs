//! Dynamic gated spiking neurons.
//!
//! A DGN is a leaky integrate-and-fire unit whose membrane decay depends on
//! its inputs: every presynaptic trace opens a conductance `C` that adds to
//! the static leak `g_l`. This crate contains the neuron and its LIF/ALIF
//! baselines, multi-layer networks with a linear readout, two independent
//! BPTT gradient implementations, Adam training, input noise and
//! gradient-sign attacks, a Monte Carlo lab for the membrane's stationary
//! variance, and the on-disk formats for spike data and checkpoints.

pub mod data;
pub mod error;
pub mod matrix;
pub mod network;
pub mod neuron;
pub mod perturb;
pub mod presets;
pub mod rng;
pub mod stability;
pub mod training;

pub use error::{Error, Result};
pub use matrix::Matrix;
