//! Perturbation specs and accuracy sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Sample, SpikeTensor};
use crate::error::{Error, Result};
use crate::network::{argmax, forward, Network};
use crate::rng::stream;

use super::attack::{bim, fgsm, pgd};
use super::noise::{additive_noise, mixed_noise, subtractive_noise};

pub const DEFAULT_MIXED_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Additive,
    Subtractive,
    Mixed,
    Fgsm,
    Pgd,
    Bim,
}

impl PerturbationKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Additive => "additive",
            Self::Subtractive => "subtractive",
            Self::Mixed => "mixed",
            Self::Fgsm => "fgsm",
            Self::Pgd => "pgd",
            Self::Bim => "bim",
        }
    }

    pub fn is_attack(self) -> bool {
        matches!(self, Self::Fgsm | Self::Pgd | Self::Bim)
    }
}

/// One perturbation setting. Noise kinds use `p` (and `mixed_factor`);
/// attacks use `epsilon`, and the iterative ones also `alpha` and `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub k: usize,
    #[serde(default = "default_factor")]
    pub mixed_factor: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_factor() -> f64 {
    DEFAULT_MIXED_FACTOR
}

impl PerturbationSpec {
    fn base(kind: PerturbationKind, seed: u64) -> Self {
        Self {
            kind,
            p: 0.0,
            epsilon: 0.0,
            alpha: 0.0,
            k: 0,
            mixed_factor: DEFAULT_MIXED_FACTOR,
            seed,
        }
    }

    pub fn noise(kind: PerturbationKind, p: f64, seed: u64) -> Self {
        Self { p, ..Self::base(kind, seed) }
    }

    pub fn fgsm(epsilon: f64) -> Self {
        Self { epsilon, ..Self::base(PerturbationKind::Fgsm, 0) }
    }

    pub fn iterative(kind: PerturbationKind, epsilon: f64, alpha: f64, k: usize, seed: u64) -> Self {
        Self { epsilon, alpha, k, ..Self::base(kind, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParam { name, reason });
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p", format!("must lie in [0, 1], got {}", self.p));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", format!("must be finite and >= 0, got {}", self.epsilon));
        }
        if !(self.mixed_factor >= 0.0 && self.mixed_factor.is_finite()) {
            return bad("mixed_factor", format!("must be finite and >= 0, got {}", self.mixed_factor));
        }
        if matches!(self.kind, PerturbationKind::Pgd | PerturbationKind::Bim) {
            if self.k == 0 {
                return bad("k", "iterative attacks need k >= 1".into());
            }
            if !(self.alpha > 0.0 && self.alpha.is_finite()) {
                return bad("alpha", format!("must be finite and > 0, got {}", self.alpha));
            }
        }
        Ok(())
    }

    /// Short human label, e.g. `pgd eps=0.003 alpha=0.01 k=4`.
    pub fn label(&self) -> String {
        match self.kind {
            PerturbationKind::Additive | PerturbationKind::Subtractive => {
                format!("{} p={}", self.kind.name(), self.p)
            }
            PerturbationKind::Mixed => format!("mixed p={} factor={}", self.p, self.mixed_factor),
            PerturbationKind::Fgsm => format!("fgsm eps={}", self.epsilon),
            _ => format!("{} eps={} alpha={} k={}", self.kind.name(), self.epsilon, self.alpha, self.k),
        }
    }

    /// Perturb one sample. Stochastic kinds draw from stream `sample_index`
    /// of `seed`, so the result does not depend on evaluation order.
    pub fn apply(&self, net: &Network, sample: &Sample, sample_index: u64) -> Result<SpikeTensor> {
        let mut rng = stream(self.seed, sample_index);
        let x = &sample.x;
        Ok(match self.kind {
            PerturbationKind::Additive => additive_noise(x, self.p, &mut rng),
            PerturbationKind::Subtractive => subtractive_noise(x, self.p, &mut rng),
            PerturbationKind::Mixed => mixed_noise(x, self.p, self.mixed_factor, &mut rng),
            PerturbationKind::Fgsm => fgsm(net, x, sample.label, self.epsilon)?,
            PerturbationKind::Pgd => pgd(net, x, sample.label, self.epsilon, self.alpha, self.k, &mut rng)?,
            PerturbationKind::Bim => bim(net, x, sample.label, self.epsilon, self.alpha, self.k)?,
        })
    }
}

/// The six operating points used for the robustness table.
pub fn reference_points(seed: u64) -> Vec<PerturbationSpec> {
    use PerturbationKind::*;
    vec![
        PerturbationSpec::noise(Additive, 0.006, seed),
        PerturbationSpec::noise(Subtractive, 0.3, seed),
        PerturbationSpec::noise(Mixed, 0.006, seed),
        PerturbationSpec::fgsm(0.003),
        PerturbationSpec::iterative(Pgd, 0.003, 0.01, 4, seed),
        PerturbationSpec::iterative(Bim, 0.003, 0.01, 4, seed),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    /// `None` for the clean baseline.
    pub spec: Option<PerturbationSpec>,
    pub accuracy: f64,
}

impl AccuracyRow {
    pub fn label(&self) -> String {
        self.spec.as_ref().map_or_else(|| "clean".to_string(), PerturbationSpec::label)
    }
}

/// Accuracy on `data` under each spec. The first row is always the clean
/// accuracy.
pub fn evaluate_under(net: &Network, data: &[Sample], specs: &[PerturbationSpec]) -> Result<Vec<AccuracyRow>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for s in specs {
        s.validate()?;
    }
    let acc = |spec: Option<&PerturbationSpec>| -> Result<f64> {
        let hits = data
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let x = match spec {
                    Some(p) => p.apply(net, s, i as u64)?,
                    None => s.x.clone(),
                };
                let (out, _) = forward(net, &x)?;
                Ok((argmax(&out.y_pred) == s.label) as usize)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
    };
    let mut rows = vec![AccuracyRow { spec: None, accuracy: acc(None)? }];
    for s in specs {
        rows.push(AccuracyRow { spec: Some(s.clone()), accuracy: acc(Some(s))? });
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "kind,p,epsilon,alpha,k,mixed_factor,seed,accuracy";

pub fn sweep_to_csv(rows: &[AccuracyRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        match &r.spec {
            None => out.push_str(&format!("clean,,,,,,,{}\n", r.accuracy)),
            Some(s) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.kind.name(),
                s.p,
                s.epsilon,
                s.alpha,
                s.k,
                s.mixed_factor,
                s.seed,
                r.accuracy
            )),
        }
    }
    out
}
