//! Experiment plumbing: file formats, metrics, hyperparameter selection and
//! repeated train/test runs.

mod cv;
mod experiment;
mod format;
mod method;
mod metrics;

pub use cv::{run_cv, select_on_validation, stratified_folds, Grid, GridPoint, GridRow, SelectionResult};
pub use experiment::{
    derive_seed, run_experiment, DataSource, ExperimentConfig, ExperimentOutcome, RunOutcome,
};
pub use format::{
    config_hash, dataset_to_string, load_dataset, load_model, model_to_string, parse_dataset,
    parse_model, save_dataset, save_model, write_atomic, ModelFile, ModelMeta,
};
pub use method::{fit, history_tsv, Fitted, HistoryRow, Method, TrainedModel, HISTORY_HEADER};
pub use metrics::{evaluate, kappa, mean_std, ConfusionMatrix, MetricsReport, RunMetrics};
