//! Subcommand implementations. Every command writes into the output
//! directory only, and every JSON summary carries the config hash and seed.

use std::fs;
use std::path::{Path, PathBuf};

use dgn_core::data::{
    dataset_from_samples, load_checkpoint, load_dataset, save_checkpoint, save_dataset, sha256_hex,
    synth_pattern_dataset, Sample, Split, SynthSpec,
};
use dgn_core::network::{Network, NetworkConfig, NeuronKind};
use dgn_core::perturb::{evaluate_under, reference_points, sweep_to_csv, AccuracyRow, PerturbationSpec};
use dgn_core::presets::{preset, preset_names, Preset};
use dgn_core::rng::stream;
use dgn_core::stability::{compare_dgn_lif, reports_to_csv, StabilityConfig, StabilityReport};
use dgn_core::training::{evaluate, init_network, train, History, TrainConfig};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{default_synthetic, DataSource, ExperimentConfig, GradcheckSection, StabilitySection};
use crate::gradcheck;
use crate::CliError;

pub const DEFAULT_PRESET: &str = "synthetic";
pub const CHECKPOINT_FILE: &str = "checkpoint.dgn";

/// Resolved inputs shared by all commands.
pub struct Context {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub config_hash: String,
}

impl Context {
    /// Apply flag overrides to a config and fingerprint the result.
    pub fn new(
        mut config: ExperimentConfig,
        seed: Option<u64>,
        preset: Option<String>,
        checkpoint: Option<PathBuf>,
        out: PathBuf,
    ) -> Result<Self, CliError> {
        if seed.is_some() {
            config.seed = seed;
        }
        if preset.is_some() {
            config.preset = preset;
        }
        if checkpoint.is_some() {
            config.checkpoint = checkpoint;
        }
        let seed = config.seed.unwrap_or(0);
        config.seed = Some(seed);
        let canonical = serde_json::to_string(&config)?;
        Ok(Self {
            config_hash: sha256_hex(canonical.as_bytes())[..16].to_string(),
            config,
            seed,
            out,
        })
    }

    fn preset(&self) -> Result<&'static Preset, CliError> {
        let name = self.config.preset.as_deref().unwrap_or(DEFAULT_PRESET);
        preset(name).ok_or_else(|| {
            CliError::Usage(format!("unknown preset `{name}` (known: {})", preset_names().join(", ")))
        })
    }

    fn kind(&self) -> NeuronKind {
        self.config.kind.unwrap_or(NeuronKind::Dgn)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// Record the fully resolved config next to the results.
    pub fn write_resolved_config(&self) -> Result<(), CliError> {
        self.write_json("config.json", &self.config).map(|_| ())
    }

    fn stamp(&self, command: &str) -> serde_json::Value {
        json!({ "command": command, "config_hash": self.config_hash, "seed": self.seed })
    }
}

struct Data {
    train: Vec<Sample>,
    test: Vec<Sample>,
    channels: usize,
    classes: usize,
}

fn load_data(ctx: &Context) -> Result<Data, CliError> {
    match ctx.config.data.clone().unwrap_or_else(default_synthetic) {
        DataSource::Synthetic { spec, test_samples_per_class } => {
            let test_spec = SynthSpec {
                samples_per_class: test_samples_per_class.unwrap_or(spec.samples_per_class),
                ..spec.clone()
            };
            Ok(Data {
                train: synth_pattern_dataset(&spec, ctx.seed, 0)?,
                test: synth_pattern_dataset(&test_spec, ctx.seed, 1)?,
                channels: spec.channels,
                classes: spec.classes,
            })
        }
        DataSource::Manifest { path, bin_ms, max_steps, bin_mode } => {
            let ds = load_dataset(&path)?;
            let train = ds.tensors(Some(Split::Train), bin_ms, max_steps, bin_mode)?;
            let mut test = ds.tensors(Some(Split::Test), bin_ms, max_steps, bin_mode)?;
            if test.is_empty() {
                test = ds.tensors(Some(Split::Validation), bin_ms, max_steps, bin_mode)?;
            }
            Ok(Data {
                train,
                test,
                channels: ds.channels,
                classes: ds.num_classes,
            })
        }
    }
}

fn network_config(ctx: &Context, data: &Data) -> Result<NetworkConfig, CliError> {
    let config = match &ctx.config.network {
        Some(n) => n.clone(),
        None => ctx.preset()?.network_config(ctx.kind(), data.channels, data.classes),
    };
    config.validate()?;
    if config.input_channels != data.channels || config.readout_dim != data.classes {
        return Err(CliError::Usage(format!(
            "network expects {} channels / {} classes but the data has {} / {}",
            config.input_channels, config.readout_dim, data.channels, data.classes
        )));
    }
    Ok(config)
}

fn train_config(ctx: &Context) -> Result<TrainConfig, CliError> {
    let mut cfg = match &ctx.config.train {
        Some(t) => t.clone(),
        None => ctx.preset()?.train_config(ctx.seed),
    };
    cfg.seed = ctx.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn load_model(ctx: &Context) -> Result<(Network, String), CliError> {
    let path = ctx
        .config
        .checkpoint
        .clone()
        .ok_or_else(|| CliError::Usage("no checkpoint given (use --checkpoint or the `checkpoint` key)".into()))?;
    if !path.exists() {
        return Err(CliError::Usage(format!("checkpoint {} does not exist", path.display())));
    }
    let text = fs::read(&path)?;
    Ok((load_checkpoint(&path)?, sha256_hex(&text)))
}

fn checked_data_for(net: &Network, ctx: &Context) -> Result<Data, CliError> {
    let data = load_data(ctx)?;
    if net.config.input_channels != data.channels {
        return Err(CliError::Usage(format!(
            "checkpoint expects {} input channels, data has {}",
            net.config.input_channels, data.channels
        )));
    }
    Ok(data)
}

pub fn cmd_train(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let data = load_data(ctx)?;
    let net_cfg = network_config(ctx, &data)?;
    let train_cfg = train_config(ctx)?;
    let mut net = init_network(net_cfg, &train_cfg.init, ctx.seed)?;
    let eval = (!data.test.is_empty()).then_some(data.test.as_slice());
    let history: History = train(&mut net, &data.train, eval, &train_cfg)?;
    let ckpt = ctx.out.join(CHECKPOINT_FILE);
    fs::create_dir_all(&ctx.out)?;
    save_checkpoint(&net, &ckpt)?;
    ctx.write("history.csv", &history.to_csv())?;
    let last = history.last().cloned();
    let mut summary = ctx.stamp("train");
    summary["epochs"] = json!(history.epochs.len());
    summary["final_train_loss"] = json!(last.as_ref().map(|s| s.train_loss));
    summary["final_train_acc"] = json!(last.as_ref().map(|s| s.train_acc));
    summary["eval_acc"] = json!(last.as_ref().and_then(|s| s.eval_acc));
    summary["checkpoint"] = json!(CHECKPOINT_FILE);
    summary["checkpoint_sha256"] = json!(sha256_hex(&fs::read(&ckpt)?));
    ctx.write_json("summary.json", &summary)?;
    Ok(summary)
}

pub fn cmd_eval(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let (net, digest) = load_model(ctx)?;
    let data = checked_data_for(&net, ctx)?;
    let mut summary = ctx.stamp("eval");
    summary["checkpoint_sha256"] = json!(digest);
    summary["test_samples"] = json!(data.test.len());
    summary["test_acc"] = json!(evaluate(&net, &data.test)?);
    ctx.write_json("eval.json", &summary)?;
    Ok(summary)
}

pub fn perturbation_specs(ctx: &Context) -> Result<Vec<PerturbationSpec>, CliError> {
    let section = ctx.config.perturb.clone().unwrap_or_default();
    let mut specs = Vec::new();
    match section.preset.as_deref() {
        None => {}
        Some("reference-points") => specs.extend(reference_points(ctx.seed)),
        Some(other) => {
            return Err(CliError::Usage(format!("unknown perturbation preset `{other}` (known: reference-points)")));
        }
    }
    specs.extend(section.specs.iter().cloned());
    for g in &section.grids {
        specs.extend(g.expand(ctx.seed));
    }
    if specs.is_empty() {
        specs = reference_points(ctx.seed);
    }
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

pub fn cmd_perturb(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let specs = perturbation_specs(ctx)?;
    let (net, digest) = load_model(ctx)?;
    let data = checked_data_for(&net, ctx)?;
    let rows = evaluate_under(&net, &data.test, &specs)?;
    ctx.write("sweep.csv", &sweep_to_csv(&rows))?;
    let mut kinds: Vec<_> = specs.iter().map(|s| s.kind).collect();
    kinds.dedup();
    for kind in kinds {
        let per_kind: Vec<AccuracyRow> = rows
            .iter()
            .filter(|r| r.spec.as_ref().is_none_or(|s| s.kind == kind))
            .cloned()
            .collect();
        ctx.write(&format!("sweep_{}.csv", kind.name()), &sweep_to_csv(&per_kind))?;
    }
    let mut summary = ctx.stamp("perturb");
    summary["checkpoint_sha256"] = json!(digest);
    summary["test_samples"] = json!(data.test.len());
    summary["rows"] = json!(rows
        .iter()
        .map(|r| json!({ "label": r.label(), "spec": r.spec, "accuracy": r.accuracy }))
        .collect::<Vec<_>>());
    ctx.write_json("sweep.json", &summary)?;
    Ok(summary)
}

/// Random stable configs with `G₀` in `[0.5, 5]`.
pub fn stability_sweep(section: &StabilitySection, seed: u64) -> Vec<StabilityConfig> {
    (0..section.sweep_size)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let n = 4;
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.5)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let g0 = rng.random_range(0.5..5.0);
            let cmu: f64 = c.iter().zip(&mu).map(|(a, b)| a * b).sum();
            if cmu >= 0.9 * g0 {
                let k = 0.8 * g0 / cmu;
                c.iter_mut().for_each(|x| *x *= k);
            }
            let cmu: f64 = c.iter().zip(&mu).map(|(a, b)| a * b).sum();
            StabilityConfig::with_defaults(mu, sigma, w, c, g0 - cmu, section.trials, seed)
        })
        .collect()
}

pub fn cmd_stability(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let section = ctx.config.stability.clone().unwrap_or_default();
    let mut configs = if section.configs.is_empty() {
        stability_sweep(&section, ctx.seed)
    } else {
        section.configs.clone()
    };
    for (i, c) in configs.iter_mut().enumerate() {
        c.seed = ctx.seed.wrapping_add(i as u64);
        c.validate()?;
    }
    let reports = configs
        .iter()
        .map(|c| compare_dgn_lif(c, &c.lif_counterpart(), section.monte_carlo))
        .collect::<Result<Vec<StabilityReport>, _>>()?;
    ctx.write("stability.csv", &reports_to_csv(&reports))?;
    let deviation = |r: &StabilityReport| {
        r.mc_dgn
            .as_ref()
            .map(|s| (s.variance - r.analytic_var_dgn).abs() / r.analytic_var_dgn)
    };
    let worst = reports.iter().filter_map(deviation).fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    let mut summary = ctx.stamp("stability");
    summary["configs"] = json!(configs);
    summary["reports"] = json!(reports);
    summary["mc_deviation"] = json!(reports.iter().map(deviation).collect::<Vec<_>>());
    summary["worst_mc_deviation"] = json!(worst);
    ctx.write_json("stability.json", &summary)?;
    if let (Some(tol), Some(w)) = (section.tolerance, worst) {
        if w > tol {
            return Err(CliError::Tolerance(format!(
                "Monte Carlo variance deviates by {:.3}% (tolerance {:.3}%)",
                100.0 * w,
                100.0 * tol
            )));
        }
    }
    Ok(summary)
}

pub fn cmd_gradcheck(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let section: GradcheckSection = ctx.config.gradcheck.clone().unwrap_or_default();
    let rows = gradcheck::run(&section, ctx.seed)?;
    ctx.write("gradcheck.csv", &gradcheck::to_csv(&rows))?;
    let worst = |check: &str| {
        rows.iter()
            .filter(|r| r.check == check)
            .map(|r| r.max_rel_error)
            .fold(0.0, f64::max)
    };
    let mut per_tensor = serde_json::Map::new();
    for r in &rows {
        let key = format!("{}:{}", r.check, r.tensor);
        let prev = per_tensor.get(&key).and_then(|v| v.as_f64()).unwrap_or(0.0);
        per_tensor.insert(key, json!(prev.max(r.max_rel_error)));
    }
    let mut summary = ctx.stamp("gradcheck");
    summary["networks"] = json!(section.networks);
    summary["worst_dual"] = json!(worst("dual"));
    summary["worst_fd"] = json!(worst("fd"));
    summary["per_tensor"] = serde_json::Value::Object(per_tensor);
    ctx.write_json("gradcheck.json", &summary)?;
    if let Some(bad) = rows.iter().find(|r| !r.pass()) {
        return Err(CliError::Tolerance(format!(
            "{} check failed at {}: relative error {:e} exceeds {:e}",
            bad.check,
            bad.path(),
            bad.max_rel_error,
            bad.tolerance
        )));
    }
    Ok(summary)
}

pub fn cmd_synth(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let (spec, test_spc) = match ctx.config.data.clone().unwrap_or_else(default_synthetic) {
        DataSource::Synthetic { spec, test_samples_per_class } => (spec, test_samples_per_class),
        DataSource::Manifest { .. } => {
            return Err(CliError::Usage("synth needs a synthetic data section".into()));
        }
    };
    let test_spec = SynthSpec {
        samples_per_class: test_spc.unwrap_or(spec.samples_per_class),
        ..spec.clone()
    };
    let train = synth_pattern_dataset(&spec, ctx.seed, 0)?;
    let test = synth_pattern_dataset(&test_spec, ctx.seed, 1)?;
    let ds = dataset_from_samples("synthetic", spec.classes, &[(Split::Train, &train), (Split::Test, &test)], 1.0);
    let manifest = save_dataset(&ctx.out.join("dataset"), &ds)?;
    let mut summary = ctx.stamp("synth");
    summary["manifest"] = json!(relative(&manifest, &ctx.out));
    summary["train_samples"] = json!(train.len());
    summary["test_samples"] = json!(test.len());
    summary["channels"] = json!(spec.channels);
    summary["timesteps"] = json!(spec.timesteps);
    ctx.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).display().to_string()
}
