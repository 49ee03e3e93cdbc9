//! Event recordings and the portable text format.
//!
//! A sample file is UTF-8 text with `\n` line endings:
//!
//! ```text
//! <channels>,<duration_ms>,<label>
//! <channel>,<time_ms>
//! <channel>,<time_ms>
//! ...
//! ```
//!
//! Numbers are written in Rust's shortest round-trip decimal form, so a
//! canonical file re-serialises byte for byte. Empty lines are not allowed.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tensor::SpikeTensor;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EventSample {
    pub channels: usize,
    pub duration_ms: f64,
    pub label: usize,
    /// `(channel, time_ms)` in file order.
    pub events: Vec<(usize, f64)>,
}

impl EventSample {
    pub fn validate(&self, name: &str) -> Result<()> {
        let fail = |reason: String| Error::Validation {
            sample: name.to_string(),
            reason,
        };
        if !(self.duration_ms >= 0.0 && self.duration_ms.is_finite()) {
            return Err(fail(format!("bad duration {}", self.duration_ms)));
        }
        for &(ch, t) in &self.events {
            if ch >= self.channels {
                return Err(fail(format!("channel {ch} >= {}", self.channels)));
            }
            if !(t >= 0.0 && t <= self.duration_ms) {
                return Err(fail(format!("event time {t} outside [0, {}]", self.duration_ms)));
            }
        }
        Ok(())
    }

    /// Events at every nonzero raster entry, one per unit of count, placed
    /// at `t·bin_ms`.
    pub fn from_raster(x: &SpikeTensor, bin_ms: f64, label: usize) -> Self {
        let mut events = Vec::new();
        for t in 0..x.timesteps() {
            for c in 0..x.channels() {
                let n = x.get(c, t).round() as usize;
                for _ in 0..n {
                    events.push((c, t as f64 * bin_ms));
                }
            }
        }
        Self {
            channels: x.channels(),
            duration_ms: x.timesteps() as f64 * bin_ms,
            label,
            events,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMode {
    /// Number of events in the window.
    #[default]
    Count,
    /// 1 if the window holds at least one event.
    Binary,
}

/// Aggregate events into windows `[t·bin_ms, (t+1)·bin_ms)`.
///
/// The output has `⌈duration/bin_ms⌉` steps (at least one). An event at
/// exactly `duration` lands in the last window. With `max_steps` the tensor
/// is padded or truncated; truncated events are dropped with a warning.
pub fn time_bin(
    sample: &EventSample,
    bin_ms: f64,
    max_steps: Option<usize>,
    mode: BinMode,
) -> Result<SpikeTensor> {
    if !(bin_ms > 0.0 && bin_ms.is_finite()) {
        return Err(Error::InvalidParam {
            name: "bin_ms",
            reason: format!("must be positive, got {bin_ms}"),
        });
    }
    sample.validate("time_bin input")?;
    let natural = ((sample.duration_ms / bin_ms).ceil() as usize).max(1);
    let steps = max_steps.unwrap_or(natural);
    let mut x = SpikeTensor::zeros(sample.channels, steps);
    let mut dropped = 0usize;
    for &(ch, t) in &sample.events {
        let bin = ((t / bin_ms).floor() as usize).min(natural - 1);
        if bin >= steps {
            dropped += 1;
            continue;
        }
        let v = x.get(ch, bin);
        x.set(
            ch,
            bin,
            match mode {
                BinMode::Count => v + 1.0,
                BinMode::Binary => 1.0,
            },
        );
    }
    if dropped > 0 {
        log::warn!("time_bin: truncation to {steps} steps dropped {dropped} events");
    }
    Ok(x)
}

pub fn format_events(sample: &EventSample) -> String {
    let mut out = format!("{},{},{}\n", sample.channels, sample.duration_ms, sample.label);
    for &(ch, t) in &sample.events {
        out.push_str(&format!("{ch},{t}\n"));
    }
    out
}

/// Parse a sample file. `origin` is used in error messages.
pub fn parse_events(text: &str, origin: &str) -> Result<EventSample> {
    let err = |line: usize, reason: String| Error::Parse {
        path: origin.to_string(),
        line,
        reason,
    };
    let mut lines = text.split_terminator('\n').enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing header line".into()))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 3 {
        return Err(err(1, format!("header needs 3 fields, got {}", fields.len())));
    }
    let channels: usize = fields[0]
        .parse()
        .map_err(|e| err(1, format!("channels: {e}")))?;
    let duration_ms: f64 = fields[1]
        .parse()
        .map_err(|e| err(1, format!("duration_ms: {e}")))?;
    let label: usize = fields[2].parse().map_err(|e| err(1, format!("label: {e}")))?;
    let mut events = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| err(n, format!("expected `channel,time_ms`, got `{line}`")))?;
        let ch: usize = a.parse().map_err(|e| err(n, format!("channel: {e}")))?;
        let t: f64 = b.parse().map_err(|e| err(n, format!("time_ms: {e}")))?;
        if ch >= channels {
            return Err(err(n, format!("channel {ch} >= {channels}")));
        }
        if !(t >= 0.0 && t <= duration_ms) {
            return Err(err(n, format!("event time {t} outside [0, {duration_ms}]")));
        }
        events.push((ch, t));
    }
    Ok(EventSample {
        channels,
        duration_ms,
        label,
        events,
    })
}

pub fn read_event_file(path: &Path) -> Result<EventSample> {
    let text = fs::read_to_string(path)?;
    parse_events(&text, &path.display().to_string())
}

pub fn write_event_file(path: &Path, sample: &EventSample) -> Result<()> {
    fs::write(path, format_events(sample))?;
    Ok(())
}
