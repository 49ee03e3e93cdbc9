//! Dataset manifests: canonical JSON naming per-sample event files.
//!
//! ```json
//! {"format_version":1,"name":"digits","channels":700,"num_classes":20,
//!  "samples":[{"file":"samples/00000.spk","split":"train"}]}
//! ```
//!
//! Sample paths are relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::events::{read_event_file, time_bin, write_event_file, BinMode, EventSample};
use super::tensor::Sample;
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
    Validation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRef {
    pub file: String,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub name: String,
    pub channels: usize,
    pub num_classes: usize,
    pub samples: Vec<SampleRef>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub file: String,
    pub split: Split,
    pub sample: EventSample,
}

/// A fully loaded, validated dataset in manifest order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub channels: usize,
    pub num_classes: usize,
    pub entries: Vec<DatasetEntry>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Bin the selected samples. Without `max_steps` every tensor is padded
    /// to the longest selected sample.
    pub fn tensors(
        &self,
        split: Option<Split>,
        bin_ms: f64,
        max_steps: Option<usize>,
        mode: BinMode,
    ) -> Result<Vec<Sample>> {
        let chosen: Vec<&DatasetEntry> = self
            .entries
            .iter()
            .filter(|e| split.is_none_or(|s| e.split == s))
            .collect();
        let steps = match max_steps {
            Some(s) => Some(s),
            None => chosen
                .iter()
                .map(|e| ((e.sample.duration_ms / bin_ms).ceil() as usize).max(1))
                .max(),
        };
        chosen
            .into_iter()
            .map(|e| {
                Ok(Sample {
                    x: time_bin(&e.sample, bin_ms, steps, mode)?,
                    label: e.sample.label,
                })
            })
            .collect()
    }
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: manifest_path.display().to_string(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::Version {
            found: manifest.format_version,
            expected: MANIFEST_VERSION,
        });
    }
    let root = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::with_capacity(manifest.samples.len());
    for r in &manifest.samples {
        let sample = read_event_file(&root.join(&r.file))?;
        let fail = |reason: String| Error::Validation {
            sample: r.file.clone(),
            reason,
        };
        if sample.channels != manifest.channels {
            return Err(fail(format!(
                "has {} channels, manifest says {}",
                sample.channels, manifest.channels
            )));
        }
        if sample.label >= manifest.num_classes {
            return Err(fail(format!(
                "label {} out of range for {} classes",
                sample.label, manifest.num_classes
            )));
        }
        sample.validate(&r.file)?;
        entries.push(DatasetEntry {
            file: r.file.clone(),
            split: r.split,
            sample,
        });
    }
    Ok(Dataset {
        name: manifest.name,
        channels: manifest.channels,
        num_classes: manifest.num_classes,
        entries,
    })
}

/// Write `manifest.json` and one event file per sample under `dir`.
/// Returns the manifest path.
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut refs = Vec::with_capacity(dataset.entries.len());
    for e in &dataset.entries {
        let path = dir.join(&e.file);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_event_file(&path, &e.sample)?;
        refs.push(SampleRef {
            file: e.file.clone(),
            split: e.split,
        });
    }
    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        name: dataset.name.clone(),
        channels: dataset.channels,
        num_classes: dataset.num_classes,
        samples: refs,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string(&manifest)? + "\n")?;
    Ok(path)
}

/// Dataset entries from rasters, one file per sample as `samples/<split>_<index>.spk`.
pub fn dataset_from_samples(
    name: &str,
    num_classes: usize,
    splits: &[(Split, &[Sample])],
    bin_ms: f64,
) -> Dataset {
    let mut entries = Vec::new();
    let mut channels = 0;
    for (split, samples) in splits {
        let tag = serde_json::to_value(split)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        for (i, s) in samples.iter().enumerate() {
            channels = s.x.channels();
            entries.push(DatasetEntry {
                file: format!("samples/{tag}_{i:05}.spk"),
                split: *split,
                sample: EventSample::from_raster(&s.x, bin_ms, s.label),
            });
        }
    }
    Dataset {
        name: name.to_string(),
        channels,
        num_classes,
        entries,
    }
}
