//! Spike tensors, event files, datasets and checkpoints.

mod checkpoint;
mod events;
mod manifest;
mod synth;
mod tensor;

pub use checkpoint::{
    checkpoint_digest, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint,
    sha256_hex, CHECKPOINT_VERSION,
};
pub use events::{format_events, parse_events, read_event_file, time_bin, write_event_file, BinMode, EventSample};
pub use manifest::{
    dataset_from_samples, load_dataset, save_dataset, Dataset, DatasetEntry, DatasetManifest, SampleRef,
    Split, MANIFEST_VERSION,
};
pub use synth::{prototypes, synth_pattern_dataset, SynthSpec};
pub use tensor::{Sample, SpikeTensor};
