use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dgn_cli::commands::{self, Context};
use dgn_cli::config::ExperimentConfig;
use dgn_cli::CliError;

/// Train, attack and analyse dynamic gated spiking networks.
#[derive(Parser)]
#[command(name = "dgn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Named hyperparameter preset, e.g. `tidigits-ff` or `synthetic`.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Checkpoint to load for `eval` and `perturb`.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Train a network and write a checkpoint plus history.
    Train,
    /// Test accuracy of a checkpoint.
    Eval,
    /// Accuracy under noise and attacks.
    Perturb,
    /// Analytic vs Monte Carlo membrane variance, DGN vs LIF.
    Stability,
    /// Check gradients against each other and finite differences.
    Gradcheck,
    /// Write a synthetic dataset in the portable format.
    Synth,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DGN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("DGN_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    configure_threads()?;
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let ctx = Context::new(config, cli.seed, cli.preset, cli.checkpoint, cli.out)?;
    let result = match cli.command {
        Command::Train => commands::cmd_train(&ctx),
        Command::Eval => commands::cmd_eval(&ctx),
        Command::Perturb => commands::cmd_perturb(&ctx),
        Command::Stability => commands::cmd_stability(&ctx),
        Command::Gradcheck => commands::cmd_gradcheck(&ctx),
        Command::Synth => commands::cmd_synth(&ctx),
    };
    if matches!(result, Ok(_) | Err(CliError::Tolerance(_))) {
        ctx.write_resolved_config()?;
    }
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
