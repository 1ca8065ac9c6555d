use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};
use crate::spd::{exp_map, karcher_mean, SpdMatrix, TangentVector, KARCHER_MAX_ITER, KARCHER_TOL};

use super::model::{Model, Prototype};
use super::schedule::{
    learning_rate_with, AnnealMode, AnnealState, DEFAULT_ANNEAL_EXPONENT,
    DEFAULT_ANNEAL_STOP_OFFSET, DEFAULT_BETA0, DEFAULT_LR_DECAY_BASE,
    DEFAULT_LR_NUMERATOR_DIVISOR,
};
use super::mixture::{argmax, class_probabilities, neg_log_likelihood};
use super::Classifier;

/// ChaCha stream used for prototype initialization.
pub(crate) const INIT_STREAM: u64 = 0;
/// ChaCha stream used for the per-epoch sample permutations.
pub(crate) const SHUFFLE_STREAM: u64 = 1;

/// Hyperparameters and schedules for prototype training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub sigma_sq_opt: f64,
    pub prototypes_per_class: usize,
    pub epochs: usize,
    pub annealing: AnnealMode,
    pub beta0: f64,
    pub anneal_exponent: f64,
    pub anneal_stop_offset: f64,
    pub lr_numerator_divisor: f64,
    pub lr_decay_base: f64,
    pub init_perturb_scale: f64,
    pub rng_seed: u64,
    /// Evaluate cost and training error after every epoch.
    pub track_history: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sigma_sq_opt: 1.5,
            prototypes_per_class: 1,
            epochs: 100,
            annealing: AnnealMode::Geometric,
            beta0: DEFAULT_BETA0,
            anneal_exponent: DEFAULT_ANNEAL_EXPONENT,
            anneal_stop_offset: DEFAULT_ANNEAL_STOP_OFFSET,
            lr_numerator_divisor: DEFAULT_LR_NUMERATOR_DIVISOR,
            lr_decay_base: DEFAULT_LR_DECAY_BASE,
            init_perturb_scale: 0.01,
            rng_seed: 0,
            track_history: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.prototypes_per_class == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "prototypes_per_class and epochs must be positive".into(),
            ));
        }
        if !(self.lr_numerator_divisor > 0.0) || !(self.lr_decay_base > 0.0 && self.lr_decay_base <= 1.0) {
            return Err(Error::Config(format!(
                "invalid learning-rate schedule: divisor {}, decay base {}",
                self.lr_numerator_divisor, self.lr_decay_base
            )));
        }
        if !(self.init_perturb_scale >= 0.0 && self.init_perturb_scale.is_finite()) {
            return Err(Error::Config(format!(
                "init_perturb_scale must be nonnegative, got {}",
                self.init_perturb_scale
            )));
        }
        let first = self.learning_rate(1, dim);
        if !(first < 1.0) {
            return Err(Error::Config(format!(
                "initial learning rate {first} is not below 1; raise lr_numerator_divisor"
            )));
        }
        self.anneal_state().map(|_| ())
    }

    pub fn learning_rate(&self, epoch: usize, dim: usize) -> f64 {
        learning_rate_with(
            epoch,
            dim,
            self.prototypes_per_class,
            self.epochs,
            self.lr_numerator_divisor,
            self.lr_decay_base,
        )
    }

    pub fn anneal_state(&self) -> Result<AnnealState> {
        AnnealState::new(
            self.annealing,
            self.sigma_sq_opt,
            self.beta0,
            self.anneal_exponent,
            self.anneal_stop_offset,
        )
    }
}

/// Per-epoch training record. `cost` and `train_error` are present when
/// history tracking is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub sigma_sq: f64,
    pub alpha: f64,
    pub cost: Option<f64>,
    pub train_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub history: Vec<EpochRecord>,
}

/// Symmetric matrix with i.i.d. `N(0, scale²)` entries, symmetrized.
pub(crate) fn random_symmetric(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    });
    (&a + a.transpose()) * 0.5
}

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `xi` prototypes per class around each class Karcher mean.
pub fn init_prototypes(
    data: &LabeledDataset,
    xi: usize,
    perturb: f64,
    seed: u64,
) -> Result<Vec<Prototype>> {
    data.require_all_classes()?;
    let mut rng = seeded_rng(seed, INIT_STREAM);
    let n = data.dim();
    let mut prototypes = Vec::with_capacity(xi * data.num_classes());
    for (k, members) in data.by_class().iter().enumerate() {
        let mean = karcher_mean(members, KARCHER_TOL, KARCHER_MAX_ITER)?;
        for _ in 0..xi {
            let matrix = if perturb == 0.0 {
                mean.clone()
            } else {
                let p = TangentVector::from_symmetric(random_symmetric(n, perturb, &mut rng));
                exp_map(&mean, &p)?
            };
            prototypes.push(Prototype {
                matrix,
                label: ClassId::from_index(k),
            });
        }
    }
    Ok(prototypes)
}

/// A prototype model trainable by per-sample stochastic updates.
pub(crate) trait Learner: Classifier {
    fn step(&mut self, x: &SpdMatrix, y: ClassId, alpha: f64) -> Result<()>;
    fn set_sigma_sq(&mut self, sigma_sq: f64) -> Result<()>;
    /// Unnormalized log mixture weights of every prototype for `x`.
    fn sample_log_weights(&self, x: &SpdMatrix) -> Result<Vec<f64>>;
    fn labels(&self) -> &[ClassId];
}

impl Learner for Model {
    fn step(&mut self, x: &SpdMatrix, y: ClassId, alpha: f64) -> Result<()> {
        self.sgd_step(x, y, alpha)
    }

    fn set_sigma_sq(&mut self, sigma_sq: f64) -> Result<()> {
        Model::set_sigma_sq(self, sigma_sq)
    }

    fn sample_log_weights(&self, x: &SpdMatrix) -> Result<Vec<f64>> {
        self.log_weights(x)
    }

    fn labels(&self) -> &[ClassId] {
        self.labels()
    }
}

/// Total negative log-likelihood and error rate in a single pass.
pub(crate) fn cost_and_error<L: Learner + ?Sized>(learner: &L, data: &LabeledDataset) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Validation("cost of an empty dataset".into()));
    }
    let labels = learner.labels();
    let mut cost = 0.0;
    let mut wrong = 0usize;
    for (x, y) in data.iter() {
        if !labels.contains(&y) {
            return Err(Error::Validation(format!("class {y} has no prototype")));
        }
        let log_w = learner.sample_log_weights(x)?;
        cost += neg_log_likelihood(&log_w, labels, y);
        let probs = class_probabilities(&log_w, labels, learner.num_classes());
        if ClassId::from_index(argmax(&probs)) != y {
            wrong += 1;
        }
    }
    Ok((cost, wrong as f64 / data.len() as f64))
}

/// Runs the epoch loop: fresh seeded permutation each epoch, `α(t)` fixed
/// within an epoch, σ² advanced at the start of each epoch.
pub(crate) fn run_epochs<L: Learner>(
    learner: &mut L,
    data: &LabeledDataset,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord, &L),
) -> Result<Vec<EpochRecord>> {
    let mut anneal = config.anneal_state()?;
    let mut rng = seeded_rng(config.rng_seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let samples = data.samples();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        anneal.advance();
        let sigma_sq = anneal.sigma_sq();
        learner.set_sigma_sq(sigma_sq)?;
        let alpha = config.learning_rate(epoch, data.dim());
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, y) = &samples[i];
            learner
                .step(x, *y, alpha)
                .map_err(|e| Error::Training {
                    epoch,
                    sample: i,
                    source: Box::new(e),
                })?;
        }
        let (cost, train_error) = if config.track_history {
            let (cost, error) = cost_and_error(&*learner, data)?;
            (Some(cost), Some(error))
        } else {
            (None, None)
        };
        let record = EpochRecord {
            epoch,
            sigma_sq,
            alpha,
            cost,
            train_error,
        };
        observer(&record, learner);
        history.push(record);
    }
    Ok(history)
}

/// Trains a probabilistic prototype model on the SPD manifold.
pub fn train(data: &LabeledDataset, config: &TrainConfig) -> Result<TrainOutcome<Model>> {
    train_with(data, config, |_, _| {})
}

/// As [`train`], calling `observer` after every epoch.
pub fn train_with(
    data: &LabeledDataset,
    config: &TrainConfig,
    mut observer: impl FnMut(&EpochRecord, &Model),
) -> Result<TrainOutcome<Model>> {
    config.validate(data.dim())?;
    let prototypes = init_prototypes(
        data,
        config.prototypes_per_class,
        config.init_perturb_scale,
        config.rng_seed,
    )?;
    let mut model = Model::with_uniform_priors(prototypes, config.sigma_sq_opt, data.num_classes())?;
    let history = run_epochs(&mut model, data, config, &mut observer)?;
    model.canonicalize()?;
    Ok(TrainOutcome { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::geo_distance;

    fn toy_data() -> LabeledDataset {
        let mk = |d: &[f64], c: u32| (SpdMatrix::from_diagonal(d).unwrap(), ClassId::new(c).unwrap());
        LabeledDataset::new(
            2,
            2,
            vec![
                mk(&[2.0, 1.0], 1),
                mk(&[2.5, 0.9], 1),
                mk(&[1.0, 2.0], 2),
                mk(&[0.8, 2.2], 2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_perturbation_gives_the_karcher_mean() {
        let data = toy_data();
        let protos = init_prototypes(&data, 1, 0.0, 7).unwrap();
        let mean = karcher_mean(&data.by_class()[0], KARCHER_TOL, KARCHER_MAX_ITER).unwrap();
        assert_eq!(protos[0].matrix, mean);
        assert_eq!(protos[1].label, ClassId::new(2).unwrap());
    }

    #[test]
    fn perturbed_prototypes_differ() {
        let protos = init_prototypes(&toy_data(), 2, 0.01, 3).unwrap();
        assert_eq!(protos.len(), 4);
        assert!(geo_distance(&protos[0].matrix, &protos[1].matrix).unwrap() > 0.0);
        assert_eq!(protos, init_prototypes(&toy_data(), 2, 0.01, 3).unwrap());
    }

    #[test]
    fn empty_class_is_named() {
        let data = LabeledDataset::new(
            2,
            3,
            vec![(SpdMatrix::identity(2), ClassId::new(1).unwrap())],
        )
        .unwrap();
        let err = init_prototypes(&data, 1, 0.0, 0).unwrap_err().to_string();
        assert!(err.contains("class 2"), "{err}");
    }

    #[test]
    fn single_class_model_is_unchanged() {
        let data = LabeledDataset::new(
            2,
            1,
            vec![
                (SpdMatrix::from_diagonal(&[2.0, 1.0]).unwrap(), ClassId::new(1).unwrap()),
                (SpdMatrix::from_diagonal(&[1.0, 3.0]).unwrap(), ClassId::new(1).unwrap()),
            ],
        )
        .unwrap();
        let config = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let protos = init_prototypes(&data, 1, config.init_perturb_scale, config.rng_seed).unwrap();
        let out = train(&data, &config).unwrap();
        assert_eq!(out.model.prototypes()[0].matrix, protos[0].matrix);
    }

    #[test]
    fn history_has_one_row_per_epoch() {
        let config = TrainConfig {
            epochs: 7,
            sigma_sq_opt: 1.0,
            ..TrainConfig::default()
        };
        let mut seen = 0;
        let out = train_with(&toy_data(), &config, |_, _| seen += 1).unwrap();
        assert_eq!(out.history.len(), 7);
        assert_eq!(seen, 7);
        assert!(out.history.iter().all(|r| r.cost.is_some()));
        assert_eq!(out.history.last().unwrap().train_error, Some(0.0));
    }

    #[test]
    fn rejects_bad_config() {
        let data = toy_data();
        let bad = [
            TrainConfig { epochs: 0, ..TrainConfig::default() },
            TrainConfig { sigma_sq_opt: 0.3, ..TrainConfig::default() },
            TrainConfig { lr_numerator_divisor: 1.0, ..TrainConfig::default() },
            TrainConfig { init_perturb_scale: -1.0, ..TrainConfig::default() },
        ];
        for c in bad {
            assert!(matches!(train(&data, &c), Err(Error::Config(_))), "{c:?}");
        }
    }
}
