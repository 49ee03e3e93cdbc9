use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::init::InitSpec;
use super::{gradient, GradientMethod};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::network::{argmax, forward, GradientSet, Network};
use crate::rng::seeded;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub shuffle: bool,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub method: GradientMethod,
}

fn default_true() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 64,
            lr: 1e-3,
            batch_size: 16,
            seed: 0,
            shuffle: true,
            init: InitSpec::default(),
            method: GradientMethod::ReverseMode,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParam {
                name: "epochs",
                reason: "must be >= 1".into(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParam {
                name: "batch_size",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.lr >= 0.0) {
            return Err(Error::InvalidParam {
                name: "lr",
                reason: format!("must be >= 0, got {}", self.lr),
            });
        }
        if self.init.c.half_width < 0.0 || self.init.w.half_width < 0.0 {
            return Err(Error::InvalidParam {
                name: "init",
                reason: "half widths must be nonnegative".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub eval_acc: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
}

impl History {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,eval_acc";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for e in &self.epochs {
            let eval = e.eval_acc.map(|a| a.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.train_acc, eval));
        }
        out
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Fraction of samples classified correctly.
pub fn evaluate(net: &Network, data: &[Sample]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = data
        .par_iter()
        .map(|s| forward(net, &s.x).map(|(o, _)| (argmax(&o.y_pred) == s.label) as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
}

/// Minibatch Adam training. The batch gradient is the mean of per-sample
/// gradients, reduced in sample order so results do not depend on threading.
pub fn train(
    net: &mut Network,
    data: &[Sample],
    eval: Option<&[Sample]>,
    cfg: &TrainConfig,
) -> Result<History> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = seeded(cfg.seed);
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(&net.params, adam);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = History::default();
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let per_sample = idx
                .par_iter()
                .map(|&i| {
                    let s = &data[i];
                    gradient(net, &s.x, s.label, cfg.method)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut total: Option<GradientSet> = None;
            for (&i, (l, g, pred)) in idx.iter().zip(per_sample) {
                if !l.is_finite() || !g.is_finite() {
                    return Err(Error::NanLoss { epoch, batch });
                }
                loss_sum += l;
                correct += (pred == data[i].label) as usize;
                match total.as_mut() {
                    Some(t) => t.add_assign(&g),
                    None => total = Some(g),
                }
            }
            let mut total = total.expect("nonempty batch");
            total.scale(1.0 / idx.len() as f64);
            adam_step(&mut net.params, &total, &mut state);
        }
        let eval_acc = match eval {
            Some(e) if !e.is_empty() => Some(evaluate(net, e)?),
            _ => None,
        };
        let stats = EpochStats {
            epoch: epoch + 1,
            train_loss: loss_sum / data.len() as f64,
            train_acc: correct as f64 / data.len() as f64,
            eval_acc,
        };
        log::debug!("{stats:?}");
        history.epochs.push(stats);
    }
    Ok(history)
}
