//! Continuous-time subthreshold references for a single neuron.
//!
//! Synaptic traces are integrated exactly (`D_i(t) = Σ_{t_j ≤ t} e^{−(t−t_j)/τ_s}`,
//! a unit jump per input spike) and the membrane with classical RK4 on a
//! fine grid. Integration is split at input-spike times so every RK4 step
//! sees a smooth right-hand side. No firing or reset is applied.

use crate::error::{check_len, Error, Result};

/// Membrane trajectory sampled at `times[k] = k·dt_fine`.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
}

impl OdeTrajectory {
    /// Linear interpolation of `V` at `t`.
    pub fn at(&self, t: f64) -> f64 {
        let dt = self.times.get(1).copied().unwrap_or(1.0) - self.times[0];
        let pos = (t - self.times[0]) / dt;
        let k = (pos.floor() as usize).min(self.v.len() - 1);
        if k + 1 >= self.v.len() {
            return self.v[k];
        }
        let frac = pos - k as f64;
        self.v[k] * (1.0 - frac) + self.v[k + 1] * frac
    }
}

/// Grid spacing bound for the reference integrators, relative to `τ_s`.
pub const MAX_FINE_STEP_FRACTION: f64 = 0.1;

/// `dV/dt = −(g_l + Σ C_i D_i)·V + Σ W_i D_i`.
#[allow(clippy::too_many_arguments)]
pub fn ode_reference_dgn(
    spike_times: &[Vec<f64>],
    w: &[f64],
    c: &[f64],
    g_l: f64,
    tau_s: f64,
    v0: f64,
    t_end: f64,
    dt_fine: f64,
) -> Result<OdeTrajectory> {
    check_len("ode W", spike_times.len(), w.len())?;
    check_len("ode C", spike_times.len(), c.len())?;
    integrate(spike_times, tau_s, v0, t_end, dt_fine, |v, d| {
        let mut g = g_l;
        let mut i = 0.0;
        for k in 0..d.len() {
            g += c[k] * d[k];
            i += w[k] * d[k];
        }
        -g * v + i
    })
}

/// Conductance neuron `dV/dt = −g_l·V + Σ g_i (E_i − V)` with `g_i = C_i·D_i`.
#[allow(clippy::too_many_arguments)]
pub fn ode_reference_conductance(
    spike_times: &[Vec<f64>],
    c: &[f64],
    e: &[f64],
    g_l: f64,
    tau_s: f64,
    v0: f64,
    t_end: f64,
    dt_fine: f64,
) -> Result<OdeTrajectory> {
    check_len("ode C", spike_times.len(), c.len())?;
    check_len("ode E", spike_times.len(), e.len())?;
    integrate(spike_times, tau_s, v0, t_end, dt_fine, |v, d| {
        let mut dv = -g_l * v;
        for k in 0..d.len() {
            dv += c[k] * d[k] * (e[k] - v);
        }
        dv
    })
}

fn integrate(
    spike_times: &[Vec<f64>],
    tau_s: f64,
    v0: f64,
    t_end: f64,
    dt_fine: f64,
    rhs: impl Fn(f64, &[f64]) -> f64,
) -> Result<OdeTrajectory> {
    let limit = MAX_FINE_STEP_FRACTION * tau_s;
    if !(dt_fine > 0.0) || dt_fine > limit {
        return Err(Error::StepTooLarge { dt: dt_fine, limit });
    }
    if !(t_end >= 0.0) {
        return Err(Error::InvalidParam {
            name: "t_end",
            reason: format!("must be >= 0, got {t_end}"),
        });
    }
    let n = spike_times.len();
    let mut events: Vec<(f64, usize)> = spike_times
        .iter()
        .enumerate()
        .flat_map(|(ch, ts)| ts.iter().map(move |&t| (t, ch)))
        .filter(|&(t, _)| t <= t_end)
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let steps = (t_end / dt_fine).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut out = Vec::with_capacity(steps + 1);
    let mut d = vec![0.0; n];
    let mut next_event = 0;
    // Spikes at t ≤ 0 are in effect from the start.
    while next_event < events.len() && events[next_event].0 <= 0.0 {
        d[events[next_event].1] += (events[next_event].0 / tau_s).exp();
        next_event += 1;
    }
    let mut t = 0.0;
    let mut v = v0;
    times.push(0.0);
    out.push(v);
    let mut scratch = vec![0.0; n];
    for k in 1..=steps {
        let t_grid = k as f64 * dt_fine;
        loop {
            let stop = match events.get(next_event) {
                Some(&(te, _)) if te <= t_grid => te,
                _ => t_grid,
            };
            if stop > t {
                v = rk4_piece(&rhs, &d, &mut scratch, tau_s, v, stop - t);
                let f = (-(stop - t) / tau_s).exp();
                d.iter_mut().for_each(|x| *x *= f);
                t = stop;
            }
            let mut jumped = false;
            while let Some(&(te, ch)) = events.get(next_event) {
                if te <= t {
                    d[ch] += 1.0;
                    next_event += 1;
                    jumped = true;
                } else {
                    break;
                }
            }
            if !jumped || t >= t_grid {
                break;
            }
        }
        times.push(t_grid);
        out.push(v);
        if !v.is_finite() {
            return Err(Error::Diverged { trial: 0, step: k });
        }
    }
    Ok(OdeTrajectory { times, v: out })
}

/// One RK4 step of length `h` with traces `d0·e^{−s/τ_s}` inside the step.
fn rk4_piece(
    rhs: &impl Fn(f64, &[f64]) -> f64,
    d0: &[f64],
    scratch: &mut [f64],
    tau_s: f64,
    v: f64,
    h: f64,
) -> f64 {
    let mut at = |s: f64, v: f64| {
        let f = (-s / tau_s).exp();
        for (o, d) in scratch.iter_mut().zip(d0) {
            *o = d * f;
        }
        rhs(v, scratch)
    };
    let k1 = at(0.0, v);
    let k2 = at(0.5 * h, v + 0.5 * h * k1);
    let k3 = at(0.5 * h, v + 0.5 * h * k2);
    let k4 = at(h, v + h * k3);
    v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}
