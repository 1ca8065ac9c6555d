use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use plrsq_core::classifier::{
    AnnealMode, DEFAULT_ANNEAL_EXPONENT, DEFAULT_ANNEAL_STOP_OFFSET, DEFAULT_BETA0,
    DEFAULT_LR_DECAY_BASE, DEFAULT_LR_NUMERATOR_DIVISOR,
};
use plrsq_core::datagen::SynthKind;
use plrsq_core::harness::Method;
use plrsq_core::TrainConfig;

#[derive(Debug, Parser)]
#[command(name = "plrsq", version, about = "Prototype classifiers for SPD matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate train, validation and test splits of a synthetic dataset.
    GenSynth(GenSynthArgs),
    /// Train a model and save it.
    Train(TrainArgs),
    /// Predict classes for a dataset with a saved model.
    Predict(PredictArgs),
    /// Run repeated train/test experiments and report accuracy and kappa.
    Eval(EvalArgs),
    /// Cross-validate a hyperparameter grid.
    Cv(CvArgs),
    /// Time the core kernels.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    /// syn1 or syn2.
    #[arg(long)]
    pub kind: SynthKind,
    #[arg(long)]
    pub seed: u64,
    /// Directory for train.spdds, validation.spdds and test.spdds.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 250)]
    pub instances_per_class: usize,
    /// Eigenvalue noise half-width; defaults to the dataset's own.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Eigenvector noise scale; defaults to the dataset's own.
    #[arg(long)]
    pub nu: Option<f64>,
}

/// Flags named after the training configuration fields.
#[derive(Debug, Clone, Args)]
pub struct TrainFlags {
    #[arg(long, default_value_t = 1.5)]
    pub sigma_sq_opt: f64,
    #[arg(long, default_value_t = 1)]
    pub prototypes_per_class: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// off, geometric or constant-beta. plrsq-const always trains without annealing.
    #[arg(long)]
    pub annealing: Option<AnnealMode>,
    #[arg(long, default_value_t = DEFAULT_BETA0)]
    pub beta0: f64,
    #[arg(long, default_value_t = DEFAULT_ANNEAL_EXPONENT)]
    pub anneal_exponent: f64,
    #[arg(long, default_value_t = DEFAULT_ANNEAL_STOP_OFFSET)]
    pub anneal_stop_offset: f64,
    #[arg(long, default_value_t = DEFAULT_LR_NUMERATOR_DIVISOR)]
    pub lr_numerator_divisor: f64,
    #[arg(long, default_value_t = DEFAULT_LR_DECAY_BASE)]
    pub lr_decay_base: f64,
    #[arg(long, default_value_t = 0.01)]
    pub init_perturb_scale: f64,
}

impl TrainFlags {
    pub fn config(&self, seed: u64, track_history: bool) -> TrainConfig {
        TrainConfig {
            sigma_sq_opt: self.sigma_sq_opt,
            prototypes_per_class: self.prototypes_per_class,
            epochs: self.epochs,
            annealing: self.annealing.unwrap_or(AnnealMode::Geometric),
            beta0: self.beta0,
            anneal_exponent: self.anneal_exponent,
            anneal_stop_offset: self.anneal_stop_offset,
            lr_numerator_divisor: self.lr_numerator_divisor,
            lr_decay_base: self.lr_decay_base,
            init_perturb_scale: self.init_perturb_scale,
            rng_seed: seed,
            track_history,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub train: PathBuf,
    /// Dataset whose error is tracked per epoch in the history.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch history (tab-separated) to write.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Tab-separated predictions; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub method: Method,
    /// Fresh synthetic data per repetition instead of fixed splits.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    pub synthetic: Option<SynthKind>,
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for report.tsv and per-run histories and models.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub flags: TrainFlags,
    #[command(flatten)]
    pub grid: GridFlags,
    /// Select hyperparameters on the validation split from the grid flags.
    #[arg(long)]
    pub select: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GridFlags {
    /// Comma-separated σ² candidates; defaults to --sigma-sq-opt.
    #[arg(long, value_delimiter = ',')]
    pub grid_sigma_sq: Vec<f64>,
    /// Comma-separated prototypes-per-class candidates.
    #[arg(long, value_delimiter = ',')]
    pub grid_xi: Vec<usize>,
    /// Comma-separated epoch-count candidates.
    #[arg(long, value_delimiter = ',')]
    pub grid_epochs: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Full grid table (tab-separated); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: TrainFlags,
    #[command(flatten)]
    pub grid: GridFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
