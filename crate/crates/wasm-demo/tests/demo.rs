use dgn_wasm::{neuron_trace, noise_raster, run_json, variance_curve, CurveParams, RasterParams, TraceParams};

#[test]
fn traces_share_input_and_gate_off_dgn_keeps_a_constant_decay() {
    let p = TraceParams {
        c: 0.0,
        ..TraceParams::default()
    };
    let r = neuron_trace(&p).unwrap();
    assert_eq!(r.dgn.v.len(), p.steps);
    assert_eq!(r.lif.v.len(), p.steps);
    assert_eq!(r.input.len(), p.inputs);
    let first = r.dgn.rho[0];
    assert!(r.dgn.rho.iter().all(|&x| (x - first).abs() < 1e-15));
    assert!(r.lif.rho.iter().all(|&x| (x - (-0.1f64).exp()).abs() < 1e-15));
}

#[test]
fn stronger_gates_close_the_decay() {
    let base = TraceParams::default();
    let weak = neuron_trace(&TraceParams { c: 0.0, ..base.clone() }).unwrap();
    let strong = neuron_trace(&TraceParams { c: 0.2, ..base }).unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&strong.dgn.rho) < mean(&weak.dgn.rho));
}

#[test]
fn variance_curve_starts_at_lif_and_falls() {
    let p = CurveParams {
        trials: 0,
        ..CurveParams::default()
    };
    let c = variance_curve(&p).unwrap();
    assert_eq!(c.scale.len(), p.points);
    assert!((c.analytic_dgn[0] - c.analytic_lif[0]).abs() <= 1e-12 * c.analytic_lif[0]);
    assert!(c.analytic_dgn.windows(2).all(|w| w[1] < w[0]));
    assert!(c.mc_dgn.iter().all(Option::is_none));
}

#[test]
fn variance_curve_monte_carlo_tracks_the_closed_form() {
    let p = CurveParams {
        points: 3,
        trials: 400,
        ..CurveParams::default()
    };
    let c = variance_curve(&p).unwrap();
    for i in 0..p.points {
        let (m, se) = (c.mc_dgn[i].unwrap(), c.mc_dgn_se[i].unwrap());
        assert!((m - c.analytic_dgn[i]).abs() < 5.0 * se + 0.1 * c.analytic_dgn[i], "point {i}");
    }
}

#[test]
fn noise_raster_moves_spikes_in_the_right_direction() {
    for (kind, adds, removes) in [("additive", true, false), ("subtractive", false, true)] {
        let r = noise_raster(&RasterParams {
            kind: kind.into(),
            p: 0.2,
            ..RasterParams::default()
        })
        .unwrap();
        assert_eq!(r.clean.len(), r.channels * r.timesteps);
        assert_eq!(r.added > 0, adds, "{kind}");
        assert_eq!(r.removed > 0, removes, "{kind}");
    }
    let zero = noise_raster(&RasterParams {
        p: 0.0,
        ..RasterParams::default()
    })
    .unwrap();
    assert_eq!(zero.clean, zero.noisy);
}

#[test]
fn json_boundary_reports_errors_as_text() {
    let ok = run_json("", noise_raster).unwrap();
    assert!(ok.contains("\"added\""));
    assert!(run_json(r#"{"kind": "gaussian"}"#, noise_raster).unwrap_err().contains("gaussian"));
    assert!(run_json(r#"{"colour": 1}"#, noise_raster).unwrap_err().contains("colour"));
    assert!(run_json(r#"{"points": 1}"#, variance_curve).is_err());
}
