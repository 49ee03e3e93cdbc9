//! Gradient-sign attacks under an ℓ∞ budget.

use rand::Rng;

use crate::data::SpikeTensor;
use crate::error::{Error, Result};
use crate::network::{forward, loss, Network};
use crate::training::{reverse_with_input, BackwardOptions};

/// `∂L/∂x` for every input element, in the tensor's channel-major layout.
pub fn input_gradient(net: &Network, x: &SpikeTensor, label: usize, opts: BackwardOptions) -> Result<Vec<f64>> {
    let (out, cache) = forward(net, x)?;
    let (_, dl_dy) = loss(&out.y_pred, label)?;
    let (_, per_step) = reverse_with_input(&cache, &dl_dy, net, opts)?;
    let t_len = x.timesteps();
    let mut g = vec![0.0; x.channels() * t_len];
    for (t, col) in per_step.iter().enumerate() {
        for (c, v) in col.iter().enumerate() {
            g[c * t_len + t] = *v;
        }
    }
    Ok(g)
}

/// `sign` with `sign(0) = 0`.
#[inline]
pub fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_budget(epsilon: f64) -> Result<()> {
    if epsilon >= 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            name: "epsilon",
            reason: format!("must be finite and >= 0, got {epsilon}"),
        })
    }
}

fn clamp_nonnegative(channels: usize, t: usize, mut v: Vec<f64>) -> SpikeTensor {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    SpikeTensor::from_vec_unchecked(channels, t, v)
}

/// `x + ε·sign(∇_x L)`, clamped below at 0.
pub fn fgsm(net: &Network, x: &SpikeTensor, label: usize, epsilon: f64) -> Result<SpikeTensor> {
    check_budget(epsilon)?;
    if epsilon == 0.0 {
        return Ok(x.clone());
    }
    let g = input_gradient(net, x, label, BackwardOptions::default())?;
    let v = x
        .values()
        .iter()
        .zip(&g)
        .map(|(xi, gi)| xi + epsilon * sign0(*gi))
        .collect();
    Ok(clamp_nonnegative(x.channels(), x.timesteps(), v))
}

fn iterate(
    net: &Network,
    x: &SpikeTensor,
    label: usize,
    epsilon: f64,
    alpha: f64,
    k: usize,
    mut start: Vec<f64>,
) -> Result<SpikeTensor> {
    if k == 0 {
        return Err(Error::InvalidParam {
            name: "k",
            reason: "iterative attacks need k >= 1".into(),
        });
    }
    if alpha * (k as f64) < epsilon {
        log::warn!("alpha·k = {} is below epsilon = {epsilon}", alpha * k as f64);
    }
    let (ch, t_len) = (x.channels(), x.timesteps());
    for _ in 0..k {
        let cur = SpikeTensor::from_vec_unchecked(ch, t_len, start.clone());
        let g = input_gradient(net, &cur, label, BackwardOptions::default())?;
        for ((s, xi), gi) in start.iter_mut().zip(x.values()).zip(&g) {
            let stepped = *s + alpha * sign0(*gi);
            *s = stepped.clamp(xi - epsilon, xi + epsilon);
        }
    }
    Ok(clamp_nonnegative(ch, t_len, start))
}

/// Projected gradient descent from a uniform random start in the ε-box.
pub fn pgd<R: Rng + ?Sized>(
    net: &Network,
    x: &SpikeTensor,
    label: usize,
    epsilon: f64,
    alpha: f64,
    k: usize,
    rng: &mut R,
) -> Result<SpikeTensor> {
    check_budget(epsilon)?;
    let start = x
        .values()
        .iter()
        .map(|xi| {
            let u: f64 = rng.random();
            xi + epsilon * (2.0 * u - 1.0)
        })
        .collect();
    iterate(net, x, label, epsilon, alpha, k, start)
}

/// Basic iterative method: PGD started from `x` itself.
pub fn bim(net: &Network, x: &SpikeTensor, label: usize, epsilon: f64, alpha: f64, k: usize) -> Result<SpikeTensor> {
    check_budget(epsilon)?;
    iterate(net, x, label, epsilon, alpha, k, x.values().to_vec())
}
