//! Small interactive views over the core crate, exported to JavaScript.
//!
//! Every operation takes a JSON object of parameters and returns a JSON
//! object, so the page needs no generated bindings beyond three functions.

use dgn_core::data::{prototypes, SpikeTensor, SynthSpec};
use dgn_core::matrix::Matrix;
use dgn_core::neuron::{dgn_step, lif_step, DgnLayerParams, LayerState, NeuronParams, SpikeMode};
use dgn_core::perturb::{additive_noise, mixed_noise, subtractive_noise, DEFAULT_MIXED_FACTOR};
use dgn_core::rng::stream;
use dgn_core::stability::{analytic_variance_dgn, analytic_variance_lif, simulate_sde, SdeMode, StabilityConfig};
use dgn_core::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[cfg(target_arch = "wasm32")]
mod bindings;

/// One neuron driven by independent Bernoulli spike trains.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceParams {
    pub inputs: usize,
    /// Per-step spike probability of every input.
    pub rate: f64,
    pub w: f64,
    pub c: f64,
    pub tau_m: f64,
    pub tau_s: f64,
    pub theta: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            inputs: 10,
            rate: 0.1,
            w: 0.3,
            c: 0.05,
            tau_m: 10.0,
            tau_s: 2.0,
            theta: 1.0,
            steps: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Trace {
    pub v: Vec<f64>,
    pub rho: Vec<f64>,
    pub spikes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePair {
    /// Input spike times per channel.
    pub input: Vec<Vec<usize>>,
    pub dgn: Trace,
    pub lif: Trace,
}

/// DGN and LIF responses to the same input raster.
pub fn neuron_trace(p: &TraceParams) -> Result<TracePair> {
    if p.inputs == 0 || p.steps == 0 || !(0.0..=1.0).contains(&p.rate) {
        return Err(Error::InvalidParam {
            name: "trace",
            reason: "inputs and steps must be positive, rate in [0, 1]".into(),
        });
    }
    let neuron = NeuronParams::from_tau_m(p.tau_m, p.tau_s, p.theta);
    let w = Matrix::filled(1, p.inputs, p.w);
    let dgn = DgnLayerParams::new(w.clone(), Matrix::filled(1, p.inputs, p.c), neuron)?;
    let mut rng = stream(p.seed, 0);
    let raster: Vec<Vec<f64>> = (0..p.steps)
        .map(|_| (0..p.inputs).map(|_| f64::from(u8::from(rng.random_bool(p.rate)))).collect())
        .collect();

    let mut out = TracePair {
        input: (0..p.inputs)
            .map(|i| (0..p.steps).filter(|&t| raster[t][i] > 0.0).collect())
            .collect(),
        dgn: Trace::default(),
        lif: Trace::default(),
    };
    let (mut sd, mut sl) = (LayerState::new(1, p.inputs), LayerState::new(1, p.inputs));
    for (t, z) in raster.iter().enumerate() {
        let (next, rec) = dgn_step(&sd, z, &dgn, SpikeMode::Heaviside)?;
        push(&mut out.dgn, t, &rec.v, rec.rho[0], rec.z[0]);
        sd = next;
        let (next, rec) = lif_step(&sl, z, &w, &neuron, neuron.lif_decay(), SpikeMode::Heaviside)?;
        push(&mut out.lif, t, &rec.v, rec.rho[0], rec.z[0]);
        sl = next;
    }
    Ok(out)
}

fn push(trace: &mut Trace, t: usize, v: &[f64], rho: f64, z: f64) {
    trace.v.push(v[0]);
    trace.rho.push(rho);
    if z > 0.0 {
        trace.spikes.push(t);
    }
}

/// Stationary membrane variance as the gate strength grows from zero.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveParams {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub w: Vec<f64>,
    /// Gate pattern; point `k` uses `c · k·c_max/(points−1)`.
    pub c: Vec<f64>,
    pub c_max: f64,
    pub g_l: f64,
    pub points: usize,
    /// Monte Carlo trials per point; zero skips simulation.
    pub trials: usize,
    pub seed: u64,
}

impl Default for CurveParams {
    fn default() -> Self {
        Self {
            mu: vec![1.0, 0.5, 0.8],
            sigma: vec![0.3, 0.2, 0.25],
            w: vec![0.5, -0.2, 0.3],
            c: vec![1.0, 1.0, 1.0],
            c_max: 0.5,
            g_l: 0.2,
            points: 11,
            trials: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub scale: Vec<f64>,
    pub analytic_dgn: Vec<f64>,
    pub analytic_lif: Vec<f64>,
    pub mc_dgn: Vec<Option<f64>>,
    pub mc_dgn_se: Vec<Option<f64>>,
}

pub fn variance_curve(p: &CurveParams) -> Result<Curve> {
    if p.points < 2 {
        return Err(Error::InvalidParam {
            name: "points",
            reason: "need at least two points".into(),
        });
    }
    let mut curve = Curve {
        scale: Vec::new(),
        analytic_dgn: Vec::new(),
        analytic_lif: Vec::new(),
        mc_dgn: Vec::new(),
        mc_dgn_se: Vec::new(),
    };
    for k in 0..p.points {
        let s = p.c_max * k as f64 / (p.points - 1) as f64;
        let c = p.c.iter().map(|c| c * s).collect();
        let mut cfg = StabilityConfig::with_defaults(
            p.mu.clone(),
            p.sigma.clone(),
            p.w.clone(),
            c,
            p.g_l,
            p.trials.max(1),
            p.seed.wrapping_add(k as u64),
        );
        cfg.mode = SdeMode::FullNonlinear;
        curve.scale.push(s);
        curve.analytic_dgn.push(analytic_variance_dgn(&cfg)?);
        curve.analytic_lif.push(analytic_variance_lif(&cfg)?);
        let mc = if p.trials > 0 { Some(simulate_sde(&cfg)?) } else { None };
        curve.mc_dgn.push(mc.as_ref().map(|m| m.variance));
        curve.mc_dgn_se.push(mc.as_ref().map(|m| m.variance_se));
    }
    Ok(curve)
}

/// A class prototype before and after input noise.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasterParams {
    /// `additive`, `subtractive` or `mixed`.
    pub kind: String,
    pub p: f64,
    pub channels: usize,
    pub timesteps: usize,
    pub rate: f64,
    pub seed: u64,
}

impl Default for RasterParams {
    fn default() -> Self {
        Self {
            kind: "additive".into(),
            p: 0.05,
            channels: 40,
            timesteps: 100,
            rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Raster {
    pub channels: usize,
    pub timesteps: usize,
    /// Channel-major spike counts.
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
    pub added: usize,
    pub removed: usize,
}

pub fn noise_raster(p: &RasterParams) -> Result<Raster> {
    if !(0.0..=1.0).contains(&p.p) {
        return Err(Error::InvalidParam {
            name: "p",
            reason: format!("{} outside [0, 1]", p.p),
        });
    }
    let spec = SynthSpec {
        classes: 1,
        channels: p.channels,
        timesteps: p.timesteps,
        rate: p.rate,
        ..SynthSpec::default()
    };
    spec.validate()?;
    let clean: SpikeTensor = prototypes(&spec, p.seed)?.remove(0);
    let mut rng = stream(p.seed, 1);
    let noisy = match p.kind.as_str() {
        "additive" => additive_noise(&clean, p.p, &mut rng),
        "subtractive" => subtractive_noise(&clean, p.p, &mut rng),
        "mixed" => mixed_noise(&clean, p.p, DEFAULT_MIXED_FACTOR, &mut rng),
        other => {
            return Err(Error::InvalidParam {
                name: "kind",
                reason: format!("unknown noise `{other}`"),
            })
        }
    };
    let (mut added, mut removed) = (0, 0);
    for (a, b) in clean.values().iter().zip(noisy.values()) {
        if b > a {
            added += (b - a) as usize;
        } else if a > b {
            removed += (a - b) as usize;
        }
    }
    Ok(Raster {
        channels: p.channels,
        timesteps: p.timesteps,
        clean: clean.values().to_vec(),
        noisy: noisy.values().to_vec(),
        added,
        removed,
    })
}

/// Parse parameters, run `f`, serialise the result. Errors come back as text.
pub fn run_json<P, R>(params: &str, f: impl FnOnce(&P) -> Result<R>) -> std::result::Result<String, String>
where
    P: for<'de> Deserialize<'de>,
    R: Serialize,
{
    let p: P = serde_json::from_str(if params.trim().is_empty() { "{}" } else { params })
        .map_err(|e| format!("bad parameters: {e}"))?;
    let r = f(&p).map_err(|e| e.to_string())?;
    serde_json::to_string(&r).map_err(|e| e.to_string())
}
