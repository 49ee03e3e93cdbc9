use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense spike activity, `channels × timesteps`, stored channel-major.
/// Values are nonnegative reals: binary spikes, binned counts, or
/// perturbed inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeTensor {
    channels: usize,
    timesteps: usize,
    values: Vec<f64>,
}

impl SpikeTensor {
    pub fn zeros(channels: usize, timesteps: usize) -> Self {
        Self {
            channels,
            timesteps,
            values: vec![0.0; channels * timesteps],
        }
    }

    pub fn from_vec(channels: usize, timesteps: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != channels * timesteps {
            return Err(Error::Shape {
                context: "spike tensor",
                expected: channels * timesteps,
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParam {
                name: "spike tensor",
                reason: format!("values must be finite and >= 0, found {bad}"),
            });
        }
        Ok(Self {
            channels,
            timesteps,
            values,
        })
    }

    /// Intermediate attack iterates may leave the nonnegative orthant.
    pub(crate) fn from_vec_unchecked(channels: usize, timesteps: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), channels * timesteps);
        Self {
            channels,
            timesteps,
            values,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    #[inline]
    pub fn get(&self, channel: usize, t: usize) -> f64 {
        self.values[channel * self.timesteps + t]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, t: usize, value: f64) {
        self.values[channel * self.timesteps + t] = value;
    }

    /// All channel values at timestep `t`.
    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.channels).map(|c| self.get(c, t)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `max |self − other|`.
    pub fn linf_distance(&self, other: &SpikeTensor) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Copy with `timesteps` columns, zero padded or truncated at the end.
    pub fn resized(&self, timesteps: usize) -> Self {
        let mut out = Self::zeros(self.channels, timesteps);
        let keep = timesteps.min(self.timesteps);
        for c in 0..self.channels {
            for t in 0..keep {
                out.set(c, t, self.get(c, t));
            }
        }
        out
    }
}

/// A labelled input ready for the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: SpikeTensor,
    pub label: usize,
}
