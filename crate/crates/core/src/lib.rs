//! Prototype-based classification of symmetric positive definite matrices.
//!
//! The crate is organized bottom-up:
//!
//! * [`spd`]: affine-invariant geometry (matrix functions, geodesics,
//!   exponential and logarithm maps, Karcher mean, gradients).
//! * [`classifier`]: the probabilistic prototype model and its stochastic
//!   Riemannian training loop.
//! * [`baselines`]: nearest Riemannian class mean and Euclidean robust soft
//!   LVQ with projection onto the SPD cone.
//! * [`datagen`]: synthetic SPD datasets and covariance descriptors.
//! * [`harness`]: file formats, metrics, cross-validation and repeated
//!   experiments.

pub mod baselines;
pub mod classifier;
pub mod dataset;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod spd;

pub use classifier::{Classifier, Model, PosteriorReport, Prototype, TrainConfig};
pub use dataset::{ClassId, LabeledDataset};
pub use error::{Error, ErrorCategory, Result};
pub use spd::{SpdMatrix, TangentVector};
