//! Randomised gradient oracles: closed form vs reverse sweep, and reverse
//! sweep vs central differences on a smoothed copy of each network.

use dgn_core::data::SpikeTensor;
use dgn_core::network::{forward, loss, GradientSet, LayerSpec, Network, NetworkConfig, NeuronKind};
use dgn_core::neuron::{AlifParams, NeuronParams, SpikeMode, Surrogate, SurrogateKind};
use dgn_core::rng::stream;
use dgn_core::training::{
    bptt_closed_form, bptt_reverse_mode, finite_difference_grad, init_network, relative_error, InitSpec, UniformInit,
};
use rand::Rng;
use serde::Serialize;

use crate::config::GradcheckSection;

pub const GRADCHECK_CSV_HEADER: &str = "network,check,tensor,worst_index,max_rel_error,tolerance,pass";

/// Worst entry of one tensor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorError {
    pub network: usize,
    pub check: &'static str,
    pub tensor: String,
    pub row: usize,
    pub col: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl TensorError {
    pub fn pass(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }

    pub fn path(&self) -> String {
        format!("network {} {}[{},{}]", self.network, self.tensor, self.row, self.col)
    }
}

/// Per-tensor worst relative errors of `a` against `b`.
pub fn compare(
    network: usize,
    check: &'static str,
    a: &GradientSet,
    b: &GradientSet,
    floor: f64,
    tolerance: f64,
) -> Vec<TensorError> {
    let names = a.tensor_names();
    a.tensors()
        .into_iter()
        .zip(b.tensors())
        .zip(names)
        .map(|((x, y), tensor)| {
            let mut worst = TensorError {
                network,
                check,
                tensor,
                row: 0,
                col: 0,
                max_rel_error: 0.0,
                tolerance,
            };
            for r in 0..x.rows() {
                for c in 0..x.cols() {
                    let e = relative_error(x.get(r, c), y.get(r, c), floor);
                    if e > worst.max_rel_error || e.is_nan() {
                        worst.max_rel_error = if e.is_nan() { f64::INFINITY } else { e };
                        worst.row = r;
                        worst.col = c;
                    }
                }
            }
            worst
        })
        .collect()
}

pub fn random_network(seed: u64, index: usize, smoothed: bool) -> (Network, SpikeTensor, usize) {
    let mut rng = stream(seed, index as u64);
    let channels = rng.random_range(2..=6);
    let t = rng.random_range(3..=10);
    let kinds = [NeuronKind::Dgn, NeuronKind::Lif, NeuronKind::Alif];
    let surrogate = if smoothed {
        Surrogate {
            kind: SurrogateKind::SigmoidDerivative,
            width: 0.5,
        }
    } else {
        Surrogate::default()
    };
    let layers = (0..rng.random_range(1..=2))
        .map(|l| {
            let kind = if l == 0 && index % 3 == 0 {
                NeuronKind::Dgn
            } else {
                kinds[rng.random_range(0..3)]
            };
            LayerSpec {
                kind,
                units: rng.random_range(1..=8),
                recurrent: index % 2 == 1,
                neuron: NeuronParams {
                    g_l: rng.random_range(0.05..0.3),
                    tau_s: rng.random_range(1.0..4.0),
                    theta: rng.random_range(0.5..1.5),
                    surrogate,
                    ..NeuronParams::default()
                },
                alif: (kind == NeuronKind::Alif).then(AlifParams::default),
            }
        })
        .collect();
    let readout_dim = rng.random_range(2..=4);
    let config = NetworkConfig {
        input_channels: channels,
        readout_dim,
        layers,
        spike_mode: if smoothed { SpikeMode::Smoothed } else { SpikeMode::Heaviside },
    };
    let init = InitSpec {
        c: UniformInit::new(0.15, 0.15),
        w: UniformInit::new(0.5, 0.7),
        readout: None,
    };
    let net = init_network(config, &init, seed.wrapping_add(index as u64)).expect("valid random config");
    let x = SpikeTensor::from_vec(
        channels,
        t,
        (0..channels * t).map(|_| rng.random_bool(0.5) as u8 as f64).collect(),
    )
    .expect("binary input");
    (net, x, rng.random_range(0..readout_dim))
}

/// Runs both oracles on `section.networks` random networks.
pub fn run(section: &GradcheckSection, seed: u64) -> dgn_core::Result<Vec<TensorError>> {
    let mut rows = Vec::new();
    for i in 0..section.networks {
        let (net, x, label) = random_network(seed, i, false);
        let (out, cache) = forward(&net, &x)?;
        let (_, dl) = loss(&out.y_pred, label)?;
        let closed = bptt_closed_form(&cache, &dl, &net)?;
        let reverse = bptt_reverse_mode(&cache, &dl, &net)?;
        rows.extend(compare(i, "dual", &closed, &reverse, 1e-12, section.dual_tolerance));

        let (net, x, label) = random_network(seed, i, true);
        let (out, cache) = forward(&net, &x)?;
        let (_, dl) = loss(&out.y_pred, label)?;
        let reverse = bptt_reverse_mode(&cache, &dl, &net)?;
        let fd = finite_difference_grad(&net, &x, label, section.fd_step)?;
        rows.extend(compare(i, "fd", &reverse, &fd, section.fd_floor, section.fd_tolerance));
    }
    Ok(rows)
}

pub fn to_csv(rows: &[TensorError]) -> String {
    let mut out = format!("{GRADCHECK_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}:{},{:e},{:e},{}\n",
            r.network,
            r.check,
            r.tensor,
            r.row,
            r.col,
            r.max_rel_error,
            r.tolerance,
            r.pass()
        ));
    }
    out
}
