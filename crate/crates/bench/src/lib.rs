//! Fixtures shared by the benchmarks.

use plrsq_core::classifier::train;
use plrsq_core::datagen::{gen_dataset, SynthKind, SynthSpec};
use plrsq_core::{LabeledDataset, Model, TrainConfig};

/// A SynI-style training split of dimension `dim` (at most 12).
pub fn dataset(dim: usize, per_class: usize, seed: u64) -> LabeledDataset {
    let spec = SynthSpec {
        dim,
        instances_per_class: per_class,
        ..SynthSpec::new(SynthKind::SynI, seed)
    };
    gen_dataset(&spec).expect("synthetic data").train
}

/// Configuration for a single quiet epoch.
pub fn one_epoch(xi: usize) -> TrainConfig {
    TrainConfig {
        epochs: 1,
        prototypes_per_class: xi,
        track_history: false,
        ..TrainConfig::default()
    }
}

/// A model after one epoch on `data`.
pub fn warm_model(data: &LabeledDataset, xi: usize) -> Model {
    train(data, &one_epoch(xi)).expect("training").model
}
