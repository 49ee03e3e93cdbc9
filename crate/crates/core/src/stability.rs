//! Steady-state statistics of a noise-driven subthreshold membrane.
//!
//! Input channel `i` carries `μ_i + σ_i ξ(t)` with one shared white-noise
//! source `ξ`. The membrane obeys
//!
//! ```text
//! dV = (−g_l V − Σ C_i μ_i V + Σ W_i μ_i) dt + Σ σ_i (W_i − C_i V) dB
//! ```
//!
//! There is no spiking and no reset here: only the subthreshold dynamics are
//! modelled. `Linearized` freezes the multiplicative noise at the steady
//! state mean; `FullNonlinear` keeps it and is read in the Itô sense.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::sha256_hex;
use crate::error::{check_len, Error, Result};
use crate::rng::stream;

/// Largest admissible `dt_sde · G₀`.
pub const MAX_STEP_G0: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdeMode {
    FullNonlinear,
    #[default]
    Linearized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub w: Vec<f64>,
    pub c: Vec<f64>,
    pub g_l: f64,
    pub dt_sde: f64,
    pub t_end: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    pub trials: usize,
    #[serde(default)]
    pub mode: SdeMode,
    #[serde(default)]
    pub seed: u64,
}

fn default_burn_in() -> f64 {
    0.5
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl StabilityConfig {
    /// Config with `dt_sde = 0.01/G₀` and `t_end = 20/G₀`. Falls back to
    /// `g_l` for the time scale when `G₀ ≤ 0`, so `validate` can reject it.
    pub fn with_defaults(mu: Vec<f64>, sigma: Vec<f64>, w: Vec<f64>, c: Vec<f64>, g_l: f64, trials: usize, seed: u64) -> Self {
        let g0 = g_l + dot(&c, &mu);
        let scale = if g0 > 0.0 { g0 } else { g_l.abs().max(1.0) };
        Self {
            mu,
            sigma,
            w,
            c,
            g_l,
            dt_sde: MAX_STEP_G0 / scale,
            t_end: 20.0 / scale,
            burn_in: default_burn_in(),
            trials,
            mode: SdeMode::Linearized,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Effective conductance `g_l + Σ C_i μ_i`.
    pub fn g0(&self) -> f64 {
        self.g_l + dot(&self.c, &self.mu)
    }

    /// Total deterministic drive `Σ W_i μ_i`.
    pub fn drive(&self) -> f64 {
        dot(&self.w, &self.mu)
    }

    /// The same inputs with the conductance weights removed. Step and
    /// horizon are rescaled by `G₀/g_l` so both runs take the same number of
    /// steps per relaxation time.
    pub fn lif_counterpart(&self) -> Self {
        let scale = self.g0() / self.g_l;
        let mut out = self.clone();
        out.c = vec![0.0; self.n()];
        if scale.is_finite() && scale > 0.0 {
            out.dt_sde = self.dt_sde * scale;
            out.t_end = self.t_end * scale;
        }
        out
    }

    /// Shape and range checks plus `G₀ > 0`.
    pub fn validate(&self) -> Result<()> {
        self.validate_inputs()?;
        self.stable_g0().map(|_| ())
    }

    fn validate_inputs(&self) -> Result<()> {
        let n = self.n();
        check_len("stability sigma", n, self.sigma.len())?;
        check_len("stability W", n, self.w.len())?;
        check_len("stability C", n, self.c.len())?;
        let all = self.mu.iter().chain(&self.sigma).chain(&self.w).chain(&self.c);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam {
                name: "stability vectors",
                reason: "all entries must be finite".into(),
            });
        }
        if self.sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidParam {
                name: "sigma",
                reason: "noise intensities must be >= 0".into(),
            });
        }
        if !(self.g_l > 0.0 && self.g_l.is_finite()) {
            return Err(Error::InvalidParam {
                name: "g_l",
                reason: format!("must be positive, got {}", self.g_l),
            });
        }
        Ok(())
    }

    fn stable_g0(&self) -> Result<f64> {
        let g0 = self.g0();
        if g0 > 0.0 && g0.is_finite() {
            Ok(g0)
        } else {
            Err(Error::Unstable { g0 })
        }
    }

    fn validate_run(&self) -> Result<f64> {
        self.validate()?;
        let g0 = self.stable_g0()?;
        let limit = MAX_STEP_G0 / g0;
        if !(self.dt_sde > 0.0) || self.dt_sde > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: self.dt_sde, limit });
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParam {
                name: "t_end",
                reason: format!("must be positive, got {}", self.t_end),
            });
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidParam {
                name: "burn_in",
                reason: format!("must lie in [0, 1), got {}", self.burn_in),
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidParam {
                name: "trials",
                reason: "need at least one trial".into(),
            });
        }
        Ok(g0)
    }

    /// Short digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        sha256_hex(json.as_bytes())[..16].to_string()
    }

    fn steps(&self) -> usize {
        ((self.t_end / self.dt_sde) - 1e-9).ceil().max(1.0) as usize
    }

    fn burn_steps(&self, steps: usize) -> usize {
        ((steps as f64) * self.burn_in).floor() as usize
    }
}

/// `E[V] = Σ W_i μ_i / G₀`.
pub fn steady_state_mean(cfg: &StabilityConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.drive() / cfg.stable_g0()?)
}

/// Per-channel terms `σ_i (W_i − C_i V_steady)` whose signed sum is squared
/// in the DGN variance.
pub fn numerator_terms(cfg: &StabilityConfig) -> Result<Vec<f64>> {
    let v_ss = steady_state_mean(cfg)?;
    Ok(cfg
        .sigma
        .iter()
        .zip(cfg.w.iter().zip(&cfg.c))
        .map(|(s, (w, c))| s * (w - c * v_ss))
        .collect())
}

/// `[Σ σ_i (W_i − C_i V_steady)]² / (2 G₀)`.
pub fn analytic_variance_dgn(cfg: &StabilityConfig) -> Result<f64> {
    let v_ss = steady_state_mean(cfg)?;
    let mut num = 0.0;
    for i in 0..cfg.n() {
        num += cfg.sigma[i] * (cfg.w[i] - cfg.c[i] * v_ss);
    }
    Ok(num * num / (2.0 * cfg.g0()))
}

/// `(Σ W_i σ_i)² / (2 g_l)`.
pub fn analytic_variance_lif(cfg: &StabilityConfig) -> Result<f64> {
    cfg.validate_inputs()?;
    let num = dot(&cfg.w, &cfg.sigma);
    Ok(num * num / (2.0 * cfg.g_l))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeSummary {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub trials: usize,
    pub steps: usize,
    pub samples_per_trial: usize,
}

struct Coefficients {
    g0: f64,
    drive: f64,
    /// Diffusion `a − b·V`.
    a: f64,
    b: f64,
    scale: f64,
}

fn coefficients(cfg: &StabilityConfig, g0: f64) -> Coefficients {
    let drive = cfg.drive();
    let a = dot(&cfg.sigma, &cfg.w);
    let b_full = dot(&cfg.sigma, &cfg.c);
    let (a, b) = match cfg.mode {
        SdeMode::FullNonlinear => (a, b_full),
        SdeMode::Linearized => (a - b_full * drive / g0, 0.0),
    };
    let v_ss = drive / g0;
    let stat_sd = (a - b * v_ss).abs() / (2.0 * g0).sqrt();
    Coefficients {
        g0,
        drive,
        a,
        b,
        scale: 1.0 + v_ss.abs() + stat_sd,
    }
}

const DIVERGENCE_FACTOR: f64 = 1e6;

/// One Euler–Maruyama path.
struct Path<'a> {
    k: &'a Coefficients,
    dt: f64,
    sqrt_dt: f64,
    v: f64,
}

impl<'a> Path<'a> {
    fn new(k: &'a Coefficients, dt: f64) -> Self {
        Self { k, dt, sqrt_dt: dt.sqrt(), v: 0.0 }
    }

    /// Advance with a standard normal `xi`; `false` once the path left the
    /// plausible range.
    fn step(&mut self, xi: f64) -> bool {
        let k = self.k;
        let drift = k.drive - k.g0 * self.v;
        let diffusion = k.a - k.b * self.v;
        self.v += drift * self.dt + diffusion * self.sqrt_dt * xi;
        self.v.is_finite() && self.v.abs() <= DIVERGENCE_FACTOR * k.scale
    }
}

/// Running mean and population variance of the post-burn-in samples.
#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn finish(&self) -> (f64, f64) {
        (self.mean, self.m2 / self.n as f64)
    }
}

fn diverged(trial: usize, step: usize, v: f64) -> Error {
    log::error!("sde trial {trial} diverged at step {step}: V = {v}");
    Error::Diverged { trial, step }
}

/// Path of one trial from `V = 0`, every step included.
fn run_trial(cfg: &StabilityConfig, k: &Coefficients, trial: usize, mut visit: impl FnMut(usize, f64)) -> Result<()> {
    let mut rng = stream(cfg.seed, trial as u64);
    let mut path = Path::new(k, cfg.dt_sde);
    for step in 0..cfg.steps() {
        if !path.step(rng.sample(StandardNormal)) {
            return Err(diverged(trial, step, path.v));
        }
        visit(step, path.v);
    }
    Ok(())
}

/// One full trajectory, for plotting.
pub fn simulate_trajectory(cfg: &StabilityConfig, trial: usize) -> Result<Vec<f64>> {
    let g0 = cfg.validate_run()?;
    let k = coefficients(cfg, g0);
    let mut out = Vec::with_capacity(cfg.steps());
    run_trial(cfg, &k, trial, |_, v| out.push(v))?;
    Ok(out)
}

/// Pool per-trial `(mean, variance)` pairs in trial order.
fn summarize(per_trial: &[(f64, f64)], steps: usize, kept: usize) -> SdeSummary {
    let trials = per_trial.len();
    let t = trials as f64;
    let grand = per_trial.iter().map(|p| p.0).sum::<f64>() / t;
    let contrib: Vec<f64> = per_trial.iter().map(|(m, v)| v + (m - grand) * (m - grand)).collect();
    let variance = contrib.iter().sum::<f64>() / t;
    let se = |xs: &mut dyn Iterator<Item = f64>, centre: f64| -> f64 {
        if trials < 2 {
            return f64::NAN;
        }
        let ss: f64 = xs.map(|x| (x - centre) * (x - centre)).sum();
        (ss / (t - 1.0)).sqrt() / t.sqrt()
    };
    SdeSummary {
        mean: grand,
        mean_se: se(&mut per_trial.iter().map(|p| p.0), grand),
        variance,
        variance_se: se(&mut contrib.iter().copied(), variance),
        trials,
        steps,
        samples_per_trial: kept,
    }
}

/// Monte Carlo estimate of the stationary mean and variance. Samples after
/// the burn-in are pooled over time and trials; standard errors come from
/// the spread of per-trial estimates. Trial `i` uses stream `i` of `seed`.
pub fn simulate_sde(cfg: &StabilityConfig) -> Result<SdeSummary> {
    let g0 = cfg.validate_run()?;
    let k = coefficients(cfg, g0);
    let steps = cfg.steps();
    let burn = cfg.burn_steps(steps).min(steps - 1);

    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut acc = Welford::default();
            run_trial(cfg, &k, trial, |step, v| {
                if step >= burn {
                    acc.push(v);
                }
            })?;
            Ok(acc.finish())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&per_trial, steps, steps - burn))
}

/// Runs the configured step and half of it on the same Brownian paths:
/// each coarse increment is the sum of the two fine ones. Returns
/// `(coarse, fine)`; both pool the same time window.
pub fn simulate_sde_halved(cfg: &StabilityConfig) -> Result<(SdeSummary, SdeSummary)> {
    let g0 = cfg.validate_run()?;
    let k = coefficients(cfg, g0);
    let steps = cfg.steps();
    let burn = cfg.burn_steps(steps).min(steps - 1);

    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(cfg.seed, trial as u64);
            let mut coarse = Path::new(&k, cfg.dt_sde);
            let mut fine = Path::new(&k, 0.5 * cfg.dt_sde);
            let (mut acc_c, mut acc_f) = (Welford::default(), Welford::default());
            for step in 0..steps {
                let x1: f64 = rng.sample(StandardNormal);
                let x2: f64 = rng.sample(StandardNormal);
                if !fine.step(x1) {
                    return Err(diverged(trial, 2 * step, fine.v));
                }
                if step >= burn {
                    acc_f.push(fine.v);
                }
                if !fine.step(x2) {
                    return Err(diverged(trial, 2 * step + 1, fine.v));
                }
                if !coarse.step((x1 + x2) / std::f64::consts::SQRT_2) {
                    return Err(diverged(trial, step, coarse.v));
                }
                if step >= burn {
                    acc_f.push(fine.v);
                    acc_c.push(coarse.v);
                }
            }
            Ok((acc_c.finish(), acc_f.finish()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (c, f): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
    let kept = steps - burn;
    Ok((summarize(&c, steps, kept), summarize(&f, 2 * steps, 2 * kept)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub config_hash: String,
    pub seed: u64,
    pub g0: f64,
    pub analytic_mean: f64,
    pub analytic_var_dgn: f64,
    pub analytic_var_lif: f64,
    pub numerator_terms: Vec<f64>,
    pub mc_dgn: Option<SdeSummary>,
    pub mc_lif: Option<SdeSummary>,
    /// `var_dgn / var_lif` from the analytic formulas.
    pub ratio_analytic: f64,
    pub ratio_mc: Option<f64>,
    pub dgn_below_lif: bool,
}

/// Analytic and (optionally) simulated DGN and LIF variances for inputs
/// shared between the two configs.
pub fn compare_dgn_lif(dgn: &StabilityConfig, lif: &StabilityConfig, monte_carlo: bool) -> Result<StabilityReport> {
    dgn.validate()?;
    lif.validate()?;
    if dgn.w != lif.w || dgn.sigma != lif.sigma || dgn.mu != lif.mu {
        return Err(Error::InvalidParam {
            name: "compare_dgn_lif",
            reason: "W, sigma and mu must match between the two configs".into(),
        });
    }
    let var_dgn = analytic_variance_dgn(dgn)?;
    let var_lif = analytic_variance_lif(lif)?;
    let (mc_dgn, mc_lif) = if monte_carlo {
        let mut lif_sim = lif.clone();
        lif_sim.c = vec![0.0; lif.n()];
        (Some(simulate_sde(dgn)?), Some(simulate_sde(&lif_sim)?))
    } else {
        (None, None)
    };
    let ratio_mc = match (&mc_dgn, &mc_lif) {
        (Some(d), Some(l)) => Some(d.variance / l.variance),
        _ => None,
    };
    let ratio_analytic = var_dgn / var_lif;
    let dgn_below_lif = var_dgn < var_lif && ratio_mc.is_none_or(|r| r < 1.0);
    Ok(StabilityReport {
        config_hash: dgn.hash(),
        seed: dgn.seed,
        g0: dgn.g0(),
        analytic_mean: steady_state_mean(dgn)?,
        analytic_var_dgn: var_dgn,
        analytic_var_lif: var_lif,
        numerator_terms: numerator_terms(dgn)?,
        mc_dgn,
        mc_lif,
        ratio_analytic,
        ratio_mc,
        dgn_below_lif,
    })
}

pub const REPORT_CSV_HEADER: &str =
    "config_hash,seed,g0,analytic_mean,analytic_var_dgn,analytic_var_lif,mc_var_dgn,mc_var_dgn_se,mc_var_lif,mc_var_lif_se,ratio_analytic,ratio_mc,dgn_below_lif";

pub fn reports_to_csv(reports: &[StabilityReport]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.config_hash,
            r.seed,
            r.g0,
            r.analytic_mean,
            r.analytic_var_dgn,
            r.analytic_var_lif,
            opt(r.mc_dgn.as_ref().map(|s| s.variance)),
            opt(r.mc_dgn.as_ref().map(|s| s.variance_se)),
            opt(r.mc_lif.as_ref().map(|s| s.variance)),
            opt(r.mc_lif.as_ref().map(|s| s.variance_se)),
            r.ratio_analytic,
            opt(r.ratio_mc),
            r.dgn_below_lif
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: f64, mu: f64, sigma: f64, c: f64, g_l: f64) -> StabilityConfig {
        StabilityConfig::with_defaults(vec![mu], vec![sigma], vec![w], vec![c], g_l, 200, 1)
    }

    #[test]
    fn mean_examples() {
        assert_eq!(steady_state_mean(&single(1.0, 0.0, 0.0, 0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(steady_state_mean(&single(1.0, 1.0, 0.0, 0.0, 2.0)).unwrap(), 0.5);
    }

    #[test]
    fn lif_examples() {
        let cfg = single(1.0, 0.0, 1.0, 0.0, 0.5);
        assert_eq!(analytic_variance_lif(&cfg).unwrap(), 1.0);
        let cfg2 = single(1.0, 0.0, 1.0, 0.0, 1.0);
        assert_eq!(analytic_variance_lif(&cfg2).unwrap(), 0.5);
    }

    #[test]
    fn unstable_rejected() {
        let cfg = single(1.0, 1.0, 0.1, -3.0, 1.0);
        assert!(matches!(steady_state_mean(&cfg), Err(Error::Unstable { .. })));
        assert!(matches!(analytic_variance_dgn(&cfg), Err(Error::Unstable { .. })));
    }

    #[test]
    fn step_limit_enforced() {
        let mut cfg = single(1.0, 1.0, 0.1, 1.0, 1.0);
        cfg.dt_sde *= 2.0;
        assert!(matches!(simulate_sde(&cfg), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn noiseless_converges_to_mean() {
        let mut cfg = single(0.8, 1.5, 0.0, 0.4, 0.3);
        cfg.t_end *= 2.0;
        let s = simulate_sde(&cfg).unwrap();
        let m = steady_state_mean(&cfg).unwrap();
        assert!((s.mean - m).abs() < 1e-6 * m.abs().max(1.0));
        assert!(s.variance <= 1e-10, "{}", s.variance);
    }

    #[test]
    fn divergence_reported() {
        // Multiplicative noise far beyond the mean-square stability limit.
        let mut cfg = single(1.0, 1.0, 50.0, 1.0, 0.01);
        cfg.mode = SdeMode::FullNonlinear;
        cfg.trials = 4;
        assert!(matches!(simulate_sde(&cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn csv_header_matches_rows() {
        let cfg = single(1.0, 1.0, 0.1, 0.5, 1.0);
        let r = compare_dgn_lif(&cfg, &cfg.lif_counterpart(), false).unwrap();
        let csv = reports_to_csv(&[r]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    }
}
