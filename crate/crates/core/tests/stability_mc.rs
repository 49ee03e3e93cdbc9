use dgn_core::stability::{
    analytic_variance_dgn, analytic_variance_lif, compare_dgn_lif, simulate_sde, simulate_sde_halved,
    steady_state_mean, SdeMode, StabilityConfig,
};

fn base(trials: usize) -> StabilityConfig {
    StabilityConfig::with_defaults(
        vec![1.0, 0.5, 2.0],
        vec![0.1, 0.05, 0.2],
        vec![0.8, -0.4, 0.5],
        vec![0.3, 0.2, 0.4],
        0.5,
        trials,
        7,
    )
}

#[test]
fn mean_matches_monte_carlo() {
    let cfg = base(10_000);
    let s = simulate_sde(&cfg).unwrap();
    let m = steady_state_mean(&cfg).unwrap();
    assert!((s.mean - m).abs() <= 0.02 * m.abs(), "{} vs {m}", s.mean);
}

#[test]
fn lif_variance_matches_monte_carlo() {
    let cfg = base(10_000).lif_counterpart();
    let s = simulate_sde(&cfg).unwrap();
    let v = analytic_variance_lif(&cfg).unwrap();
    assert!((s.variance - v).abs() <= 0.03 * v, "{} vs {v}", s.variance);
}

#[test]
fn c_zero_reduces_to_lif() {
    let cfg = base(1).lif_counterpart();
    let a = analytic_variance_dgn(&cfg).unwrap();
    let b = analytic_variance_lif(&cfg).unwrap();
    assert!((a - b).abs() <= 1e-14 * b.max(1.0));
    let r = compare_dgn_lif(&cfg, &cfg, false).unwrap();
    assert_eq!(r.ratio_analytic, 1.0);
}

#[test]
fn nonlinear_agrees_with_linearized_for_small_noise() {
    let mut lin = base(10_000);
    let mut full = lin.clone();
    full.mode = SdeMode::FullNonlinear;
    let a = simulate_sde(&lin).unwrap().variance;
    let b = simulate_sde(&full).unwrap().variance;
    assert!((a - b).abs() <= 0.1 * a, "{a} vs {b}");

    // Itô second moment of dV = (m·G₀ − G₀V)dt + (A − BV)dB is
    // (A − B·m)² / (2G₀ − B²).
    lin.sigma = vec![0.6, 0.3, 0.8];
    full.sigma = lin.sigma.clone();
    let g0 = full.g0();
    let m = steady_state_mean(&full).unwrap();
    let a_: f64 = full.sigma.iter().zip(&full.w).map(|(s, w)| s * w).sum();
    let b_: f64 = full.sigma.iter().zip(&full.c).map(|(s, c)| s * c).sum();
    let exact = (a_ - b_ * m).powi(2) / (2.0 * g0 - b_ * b_);
    let mc = simulate_sde(&full).unwrap();
    assert!((mc.variance - exact).abs() <= 0.03 * exact, "{} vs {exact}", mc.variance);
}

#[test]
fn standard_error_scales_with_inverse_sqrt_trials() {
    let mut cfg = base(100);
    let mut pts = Vec::new();
    for trials in [100usize, 1_000, 10_000] {
        cfg.trials = trials;
        let s = simulate_sde(&cfg).unwrap();
        pts.push(((trials as f64).ln(), s.variance_se.ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn halving_the_step_stays_within_standard_error() {
    let cfg = base(10_000);
    let (coarse, fine) = simulate_sde_halved(&cfg).unwrap();
    assert!(
        (coarse.variance - fine.variance).abs() < coarse.variance_se,
        "{} vs {} (se {})",
        coarse.variance,
        fine.variance,
        coarse.variance_se
    );
}

#[test]
fn simulation_is_reproducible() {
    let cfg = base(300);
    assert_eq!(simulate_sde(&cfg).unwrap(), simulate_sde(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(simulate_sde(&cfg).unwrap().variance, simulate_sde(&other).unwrap().variance);
}
