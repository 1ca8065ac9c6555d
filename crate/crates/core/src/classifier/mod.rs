//! Probabilistic learning vector quantization on the SPD manifold.
//!
//! A model is a mixture with one Gaussian-like component
//! `exp(-δ²(X, W_l) / 2σ²)` per labeled prototype `W_l`. Training minimizes
//! the negative log-likelihood of the labels by stochastic Riemannian
//! gradient descent, moving each prototype along the geodesic through the
//! current sample.

mod mixture;
mod model;
mod schedule;
mod train;

pub use mixture::Assignment;
pub use model::{f_score, Model, PosteriorReport, Prototype};
pub use schedule::{
    anneal_sigma, learning_rate, learning_rate_with, AnnealMode, AnnealState,
    DEFAULT_ANNEAL_EXPONENT, DEFAULT_ANNEAL_STOP_OFFSET, DEFAULT_BETA0, DEFAULT_LR_DECAY_BASE,
    DEFAULT_LR_NUMERATOR_DIVISOR,
};
pub use train::{init_prototypes, train, train_with, EpochRecord, TrainConfig, TrainOutcome};

pub(crate) use mixture::{argmax, assignment, class_probabilities, log_weights, neg_log_likelihood};
pub(crate) use model::{check_prototype_set, check_sigma_sq};
pub(crate) use train::{random_symmetric, run_epochs, seeded_rng, Learner, INIT_STREAM};

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::Result;
use crate::spd::SpdMatrix;

/// Anything that assigns a class to an SPD matrix.
pub trait Classifier {
    fn predict_class(&self, x: &SpdMatrix) -> Result<ClassId>;
    fn num_classes(&self) -> usize;
}

/// Fraction of misclassified samples.
pub fn error_rate<C: Classifier + ?Sized>(classifier: &C, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut wrong = 0usize;
    for (x, y) in data.iter() {
        if classifier.predict_class(x)? != y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / data.len() as f64)
}
