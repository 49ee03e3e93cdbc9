//! Acceptance gate. Every check prints one `PASS`/`FAIL` line with its
//! measured value and wall time. Run with
//!
//! ```text
//! cargo test --release -p dgn-core --test acceptance -- --nocapture --test-threads=1
//! ```

mod common;

use std::time::Instant;

use common::{random_net, smooth_surrogate, ALL_KINDS};
use dgn_core::data::{load_dataset, synth_pattern_dataset, BinMode, Sample, SpikeTensor, Split, SynthSpec};
use dgn_core::matrix::Matrix;
use dgn_core::network::{forward, loss, LayerSpec, Network, NetworkConfig, NeuronKind};
use dgn_core::neuron::{
    dgn_step, ode_reference_conductance, ode_reference_dgn, DgnLayerParams, LayerState, NeuronParams, SpikeMode,
    Truncation,
};
use dgn_core::perturb::{
    additive_noise, bim, evaluate_under, fgsm, mixed_noise, pgd, subtractive_noise, PerturbationKind,
    PerturbationSpec,
};
use dgn_core::presets::preset;
use dgn_core::rng::{seeded, stream};
use dgn_core::stability::{
    analytic_variance_dgn, analytic_variance_lif, simulate_sde, SdeMode, StabilityConfig,
};
use dgn_core::training::{
    bptt_closed_form, bptt_reverse_mode, evaluate, finite_difference_grad, init_network, max_relative_error, train,
    InitSpec, UniformInit,
};
use rand::Rng;

fn report(name: &str, pass: bool, detail: String, start: Instant, budget_s: f64) {
    let elapsed = start.elapsed().as_secs_f64();
    let ok = pass && elapsed <= budget_s;
    println!(
        "{} {name}: {detail} [{elapsed:.2}s of {budget_s}s]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{name} failed: {detail} in {elapsed:.2}s");
}

#[test]
fn gradient_oracle() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut recurrent = 0;
    let nets = 40;
    for seed in 0..nets {
        let rec = if seed % 2 == 0 { Some(false) } else { Some(true) };
        let r = random_net(1000 + seed, &ALL_KINDS, rec, SpikeMode::Heaviside, Default::default());
        recurrent += r.net.config.layers.iter().any(|l| l.recurrent) as usize;
        let (out, cache) = forward(&r.net, &r.x).unwrap();
        let (_, dl) = loss(&out.y_pred, r.label).unwrap();
        let a = bptt_closed_form(&cache, &dl, &r.net).unwrap();
        let b = bptt_reverse_mode(&cache, &dl, &r.net).unwrap();
        worst = worst.max(max_relative_error(&a, &b, 1e-12));
    }
    report(
        "gradient_oracle",
        worst <= 1e-10,
        format!("{nets} networks ({recurrent} recurrent), max relative error {worst:.2e} (limit 1e-10)"),
        start,
        10.0,
    );
}

/// 5 inputs, one 4-unit DGN layer, 3 outputs, T = 8.
fn four_unit_net(recurrent: bool) -> (Network, SpikeTensor, usize) {
    let mut rng = seeded(77);
    let neuron = NeuronParams {
        g_l: 0.1,
        tau_s: 2.0,
        theta: 0.8,
        surrogate: smooth_surrogate(),
        ..NeuronParams::default()
    };
    let config = NetworkConfig {
        input_channels: 5,
        readout_dim: 3,
        layers: vec![LayerSpec {
            kind: NeuronKind::Dgn,
            units: 4,
            recurrent,
            neuron,
            alif: None,
        }],
        spike_mode: SpikeMode::Smoothed,
    };
    let init = InitSpec {
        c: UniformInit::new(0.15, 0.1),
        w: UniformInit::new(0.5, 0.5),
        readout: None,
    };
    let net = init_network(config, &init, 5).unwrap();
    let x = common::binary_input(&mut rng, 5, 8, 0.5);
    (net, x, 1)
}

#[test]
fn smoothed_finite_differences() {
    // Central differences at h = 1e-5 carry ~1e-11 absolute rounding error,
    // so entries are compared relative to max(|a|, |b|, 1e-5).
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    for recurrent in [false, true] {
        let (net, x, label) = four_unit_net(recurrent);
        let (out, cache) = forward(&net, &x).unwrap();
        let (_, dl) = loss(&out.y_pred, label).unwrap();
        let g = bptt_reverse_mode(&cache, &dl, &net).unwrap();
        let c = bptt_closed_form(&cache, &dl, &net).unwrap();
        let fd = finite_difference_grad(&net, &x, label, 1e-5).unwrap();
        worst = worst
            .max(max_relative_error(&g, &fd, 1e-5))
            .max(max_relative_error(&c, &fd, 1e-5));
        count += g.tensors().iter().map(|t| t.as_slice().len()).sum::<usize>();
    }
    report(
        "smoothed_finite_differences",
        worst <= 1e-5,
        format!("{count} parameters, max relative error {worst:.2e} (limit 1e-5)"),
        start,
        30.0,
    );
}

fn random_stability(rng: &mut impl Rng, trials: usize, seed: u64) -> StabilityConfig {
    let n = 4;
    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.5)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let g0_target = rng.random_range(0.5..5.0);
    let cmu: f64 = c.iter().zip(&mu).map(|(a, b)| a * b).sum();
    if cmu >= 0.9 * g0_target {
        let k = 0.8 * g0_target / cmu;
        c.iter_mut().for_each(|x| *x *= k);
    }
    let cmu: f64 = c.iter().zip(&mu).map(|(a, b)| a * b).sum();
    StabilityConfig::with_defaults(mu, sigma, w, c, g0_target - cmu, trials, seed)
}

#[test]
fn sde_variance_verification() {
    let start = Instant::now();
    let mut rng = seeded(31);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let cfg = random_stability(&mut rng, 10_000, 500 + i);
        let g0 = cfg.g0();
        assert!((0.5..=5.0).contains(&g0));
        let exact = analytic_variance_dgn(&cfg).unwrap();
        let mc = simulate_sde(&cfg).unwrap();
        worst = worst.max((mc.variance - exact).abs() / exact);
    }
    let mut identity = 0.0f64;
    for i in 0..100 {
        let cfg = random_stability(&mut rng, 1, i).lif_counterpart();
        let a = analytic_variance_dgn(&cfg).unwrap();
        let b = analytic_variance_lif(&cfg).unwrap();
        identity = identity.max((a - b).abs() / b.max(1.0));
    }
    // One noisy channel with W = C·V_steady and μ = 0, plus a noiseless drive.
    let (g_l, c0, c1, w1, mu1) = (0.5, 0.5, 0.2, 1.0, 1.0);
    let v_ss = w1 * mu1 / (g_l + c1 * mu1);
    let cancel = StabilityConfig::with_defaults(
        vec![0.0, mu1],
        vec![0.3, 0.0],
        vec![c0 * v_ss, w1],
        vec![c0, c1],
        g_l,
        10_000,
        99,
    );
    let mut floor_cfg = cancel.clone();
    floor_cfg.sigma = vec![0.0, 0.0];
    let cancelled = simulate_sde(&cancel).unwrap().variance;
    let floor = simulate_sde(&floor_cfg).unwrap().variance;
    report(
        "sde_variance_verification",
        worst <= 0.03 && identity <= 1e-14 && cancelled <= 5.0 * floor,
        format!(
            "worst MC/analytic deviation {:.2}% (limit 3%), C=0 identity {identity:.1e}, cancellation {cancelled:.2e} vs floor {floor:.2e}",
            100.0 * worst
        ),
        start,
        120.0,
    );
}

#[test]
fn dgn_suppresses_noise_relative_to_lif() {
    let start = Instant::now();
    let mut rng = seeded(41);
    let configs = 100;
    let (mut analytic_wins, mut mc_wins) = (0, 0);
    for i in 0..configs {
        let n = 4;
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let sigma: Vec<f64> = mu.iter().map(|m| rng.random_range(0.0..0.2) * m).collect();
        let k = rng.random_range(0.1..1.0);
        let c: Vec<f64> = w.iter().map(|x| k * x).collect();
        let g_l = rng.random_range(0.1..1.0);
        let mut dgn = StabilityConfig::with_defaults(mu, sigma, w, c, g_l, 2_000, 700 + i);
        dgn.mode = SdeMode::FullNonlinear;
        let lif = dgn.lif_counterpart();
        analytic_wins += (analytic_variance_dgn(&dgn).unwrap() < analytic_variance_lif(&lif).unwrap()) as usize;
        mc_wins += (simulate_sde(&dgn).unwrap().variance < simulate_sde(&lif).unwrap().variance) as usize;
    }
    let need = (configs as f64 * 0.95).ceil() as usize;
    report(
        "dgn_suppresses_noise_relative_to_lif",
        analytic_wins >= need && mc_wins >= need,
        format!("analytic {analytic_wins}/{configs}, Monte Carlo {mc_wins}/{configs} (need {need})"),
        start,
        120.0,
    );
}

#[test]
fn discretisation_convergence() {
    let start = Instant::now();
    let w = [0.6, -0.3, 0.4];
    let c = [0.2, 0.5, 0.1];
    let (g_l, tau_s, t_end) = (0.2, 2.0, 12.0);
    let spikes = vec![vec![1.0, 4.0, 4.5], vec![2.0, 7.0], vec![0.5, 3.0, 9.0]];
    let reference = ode_reference_dgn(&spikes, &w, &c, g_l, tau_s, 0.0, t_end, 1e-3).unwrap();
    let error = |dt: f64| -> f64 {
        let neuron = NeuronParams {
            g_l,
            tau_s,
            dt,
            theta: 1e9,
            truncation: Truncation::HardClamp01,
            ..NeuronParams::default()
        };
        let params = DgnLayerParams::new(
            Matrix::from_vec(1, 3, w.to_vec()).unwrap(),
            Matrix::from_vec(1, 3, c.to_vec()).unwrap(),
            neuron,
        )
        .unwrap();
        let mut state = LayerState::new(1, 3);
        let mut worst = 0.0f64;
        for k in 1..=(t_end / dt).round() as usize {
            let t = k as f64 * dt;
            let z: Vec<f64> = spikes
                .iter()
                .map(|ts| ts.iter().any(|&s| (s - t).abs() < 1e-9) as u8 as f64)
                .collect();
            state = dgn_step(&state, &z, &params, SpikeMode::Heaviside).unwrap().0;
            worst = worst.max((state.v[0] - reference.at(t)).abs());
        }
        worst
    };
    let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&dt| error(dt)).collect();
    let ratios: Vec<f64> = errs.windows(2).map(|p| p[0] / p[1]).collect();
    let e = [2.0, -1.0, 0.5];
    let wc: Vec<f64> = c.iter().zip(&e).map(|(c, e)| c * e).collect();
    let a = ode_reference_dgn(&spikes, &wc, &c, g_l, tau_s, 0.3, t_end, 0.01).unwrap();
    let b = ode_reference_conductance(&spikes, &c, &e, g_l, tau_s, 0.3, t_end, 0.01).unwrap();
    let equiv = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    report(
        "discretisation_convergence",
        ratios.iter().all(|r| (1.7..=2.3).contains(r)) && equiv <= 1e-8,
        format!("halving ratios {ratios:.3?}, conductance equivalence {equiv:.1e}"),
        start,
        30.0,
    );
}

fn rate_ok(count: usize, n: usize, p: f64) -> (bool, f64) {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    let z = if sd == 0.0 { (count as f64 - mean).abs() } else { (count as f64 - mean) / sd };
    (z.abs() <= 4.0, z)
}

#[test]
fn perturbation_calibration() {
    let start = Instant::now();
    let (ch, t) = (1000, 1000);
    let n = ch * t;
    let zeros = SpikeTensor::zeros(ch, t);
    let ones = SpikeTensor::from_vec(ch, t, vec![1.0; n]).unwrap();
    let half = SpikeTensor::from_vec(ch, t, (0..n).map(|i| (i % 2) as f64).collect()).unwrap();
    let mut zs = Vec::new();
    let p = 0.05;
    let added = additive_noise(&zeros, p, &mut stream(1, 0)).total() as usize;
    zs.push(rate_ok(added, n, p));
    let kept = subtractive_noise(&ones, 0.3, &mut stream(1, 1)).total() as usize;
    zs.push(rate_ok(n - kept, n, 0.3));
    let m = mixed_noise(&half, 0.02, 10.0, &mut stream(1, 2));
    let (mut add, mut del) = (0, 0);
    for (a, b) in m.values().iter().zip(half.values()) {
        add += (*b == 0.0 && *a == 1.0) as usize;
        del += (*b == 1.0 && *a == 0.0) as usize;
    }
    zs.push(rate_ok(add, n / 2, 0.02));
    zs.push(rate_ok(del, n / 2, 0.2));
    let rates_ok = zs.iter().all(|z| z.0);

    // ℓ∞ budget over a 1000-sample sweep of all three attacks.
    let spec = SynthSpec::default();
    let data = synth_pattern_dataset(&SynthSpec { samples_per_class: 500, ..spec.clone() }, 3, 0).unwrap();
    let p = preset("synthetic").unwrap();
    let net = init_network(p.network_config(NeuronKind::Dgn, spec.channels, spec.classes), &p.init, 3).unwrap();
    let eps = 0.01;
    let mut worst = 0.0f64;
    let mut moved = 0usize;
    for (i, s) in data.iter().enumerate() {
        let adv = match i % 3 {
            0 => fgsm(&net, &s.x, s.label, eps).unwrap(),
            1 => pgd(&net, &s.x, s.label, eps, 0.004, 4, &mut stream(9, i as u64)).unwrap(),
            _ => bim(&net, &s.x, s.label, eps, 0.004, 4).unwrap(),
        };
        let d = adv.linf_distance(&s.x);
        moved += (d > 0.0) as usize;
        worst = worst.max(d);
    }
    let budget_ok = worst <= eps + 1e-12 && data.len() == 1000;

    let a = bim(&net, &data[0].x, data[0].label, eps, 0.004, 4).unwrap();
    let b = bim(&net, &data[0].x, data[0].label, eps, 0.004, 4).unwrap();
    let bits_equal = a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits());

    let z_text: Vec<String> = zs.iter().map(|z| format!("{:+.2}", z.1)).collect();
    report(
        "perturbation_calibration",
        rates_ok && budget_ok && bits_equal,
        format!(
            "rate z-scores [{}] (limit 4), max attack distance {worst:.3e} over {} samples ({moved} moved), BIM bit-exact {bits_equal}",
            z_text.join(", "),
            data.len()
        ),
        start,
        60.0,
    );
}

fn synth_splits(seed: u64) -> (Vec<Sample>, Vec<Sample>) {
    let spec = SynthSpec::default();
    let train_set = synth_pattern_dataset(&spec, seed, 0).unwrap();
    let test_set = synth_pattern_dataset(&SynthSpec { samples_per_class: 500, ..spec }, seed, 1).unwrap();
    (train_set, test_set)
}

#[test]
fn desk_scale_robustness() {
    let start = Instant::now();
    let p = preset("synthetic").unwrap();
    let (train_set, test_set) = synth_splits(2024);
    let specs = [
        PerturbationSpec::noise(PerturbationKind::Additive, 0.05, 0),
        PerturbationSpec::fgsm(0.01),
    ];
    let seeds = 5;
    let mut clean_min = [1.0f64; 2];
    let mut sums = [[0.0f64; 2]; 2];
    for (ki, kind) in [NeuronKind::Dgn, NeuronKind::Lif].into_iter().enumerate() {
        for seed in 0..seeds {
            let config = p.network_config(kind, 20, 2);
            let mut net = init_network(config, &p.init, seed).unwrap();
            train(&mut net, &train_set, None, &p.train_config(seed)).unwrap();
            let specs: Vec<_> = specs.iter().map(|s| PerturbationSpec { seed: 100 + seed, ..s.clone() }).collect();
            let rows = evaluate_under(&net, &test_set, &specs).unwrap();
            clean_min[ki] = clean_min[ki].min(rows[0].accuracy);
            sums[ki][0] += rows[1].accuracy;
            sums[ki][1] += rows[2].accuracy;
        }
    }
    let mean = |ki: usize, j: usize| sums[ki][j] / seeds as f64;
    let pass = clean_min.iter().all(|&a| a >= 0.95) && mean(0, 0) >= mean(1, 0) && mean(0, 1) >= mean(1, 1);
    report(
        "desk_scale_robustness",
        pass,
        format!(
            "min clean DGN {:.3} LIF {:.3}; additive p=0.05 DGN {:.3} LIF {:.3}; FGSM eps=0.01 DGN {:.3} LIF {:.3}",
            clean_min[0],
            clean_min[1],
            mean(0, 0),
            mean(1, 0),
            mean(0, 1),
            mean(1, 1)
        ),
        start,
        600.0,
    );
}

/// Runs only when `DGN_TIDIGITS_MANIFEST` names the `manifest.json` of a
/// pre-encoded TIDIGITS dataset. `DGN_TIDIGITS_BIN_MS` sets the time bin
/// (default 1 ms).
#[test]
fn tidigits_feedforward_extended() {
    let Ok(manifest) = std::env::var("DGN_TIDIGITS_MANIFEST") else {
        println!("SKIP tidigits_feedforward_extended: DGN_TIDIGITS_MANIFEST not set");
        return;
    };
    let bin_ms = std::env::var("DGN_TIDIGITS_BIN_MS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1.0);
    let start = Instant::now();
    let data = load_dataset(std::path::Path::new(&manifest)).unwrap();
    let to_samples = |split| -> Vec<Sample> { data.tensors(Some(split), bin_ms, None, BinMode::Count).unwrap() };
    let train_set = to_samples(Split::Train);
    let test_set = to_samples(Split::Test);
    let p = preset("tidigits-ff").unwrap();
    let mut net = init_network(p.network_config(NeuronKind::Dgn, data.channels, data.num_classes), &p.init, 0).unwrap();
    train(&mut net, &train_set, None, &p.train_config(0)).unwrap();
    let acc = evaluate(&net, &test_set).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "{} tidigits_feedforward_extended: test accuracy {:.4} (target 0.970) [{elapsed:.0}s, non-gating]",
        if acc >= 0.97 { "PASS" } else { "FAIL" },
        acc
    );
}
