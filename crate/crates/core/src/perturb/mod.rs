//! Input noise and adversarial attacks.

mod attack;
mod noise;
mod sweep;

pub use attack::{bim, fgsm, input_gradient, pgd, sign0};
pub use noise::{additive_noise, mixed_noise, subtractive_noise};
pub use sweep::{
    evaluate_under, reference_points, sweep_to_csv, AccuracyRow, PerturbationKind, PerturbationSpec,
    DEFAULT_MIXED_FACTOR, SWEEP_CSV_HEADER,
};
