use dgn_core::matrix::Matrix;
use dgn_core::neuron::{
    dgn_step, ode_reference_conductance, ode_reference_dgn, DgnLayerParams, LayerState, NeuronParams, SpikeMode,
    Truncation,
};

const W: [f64; 3] = [0.6, -0.3, 0.4];
const C: [f64; 3] = [0.2, 0.5, 0.1];
const G_L: f64 = 0.2;
const TAU_S: f64 = 2.0;
const T_END: f64 = 12.0;

fn spikes() -> Vec<Vec<f64>> {
    vec![vec![1.0, 4.0, 4.5], vec![2.0, 7.0], vec![0.5, 3.0, 9.0]]
}

/// Subthreshold single-unit simulation; returns `V` at every step time.
fn discrete(dt: f64) -> Vec<(f64, f64)> {
    let neuron = NeuronParams {
        g_l: G_L,
        tau_s: TAU_S,
        dt,
        theta: 1e9,
        truncation: Truncation::HardClamp01,
        ..NeuronParams::default()
    };
    let params = DgnLayerParams::new(Matrix::from_vec(1, 3, W.to_vec()).unwrap(), Matrix::from_vec(1, 3, C.to_vec()).unwrap(), neuron).unwrap();
    let sp = spikes();
    let steps = (T_END / dt).round() as usize;
    let mut state = LayerState::new(1, 3);
    let mut out = Vec::with_capacity(steps);
    for k in 1..=steps {
        let t = k as f64 * dt;
        let z: Vec<f64> = sp
            .iter()
            .map(|ts| ts.iter().any(|&s| (s - t).abs() < 1e-9 * dt.max(1.0)) as u8 as f64)
            .collect();
        let (next, rec) = dgn_step(&state, &z, &params, SpikeMode::Heaviside).unwrap();
        assert_eq!(rec.z[0], 0.0);
        state = next;
        out.push((t, state.v[0]));
    }
    out
}

fn max_error(dt: f64, reference: &dgn_core::neuron::OdeTrajectory) -> f64 {
    discrete(dt)
        .iter()
        .map(|(t, v)| (v - reference.at(*t)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn euler_discretisation_is_first_order() {
    let reference = ode_reference_dgn(&spikes(), &W, &C, G_L, TAU_S, 0.0, T_END, 1e-3).unwrap();
    let dts = [0.1, 0.05, 0.025, 0.0125];
    let errs: Vec<f64> = dts.iter().map(|&dt| max_error(dt, &reference)).collect();
    for pair in errs.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((1.7..=2.3).contains(&ratio), "errors {errs:?}, ratio {ratio}");
    }
}

#[test]
fn conductance_form_equals_gated_form() {
    let e = [2.0, -1.0, 0.5];
    let w: Vec<f64> = C.iter().zip(&e).map(|(c, e)| c * e).collect();
    let a = ode_reference_dgn(&spikes(), &w, &C, G_L, TAU_S, 0.3, T_END, 0.01).unwrap();
    let b = ode_reference_conductance(&spikes(), &C, &e, G_L, TAU_S, 0.3, T_END, 0.01).unwrap();
    let worst = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst:e}");
}

#[test]
fn reference_is_converged() {
    let a = ode_reference_dgn(&spikes(), &W, &C, G_L, TAU_S, 0.0, T_END, 1e-2).unwrap();
    let b = ode_reference_dgn(&spikes(), &W, &C, G_L, TAU_S, 0.0, T_END, 1e-3).unwrap();
    let worst = (0..=1200).map(|k| (a.at(k as f64 * 0.01) - b.at(k as f64 * 0.01)).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}
