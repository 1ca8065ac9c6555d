use nalgebra::DMatrix;

use crate::classifier::{
    argmax, assignment, check_prototype_set, check_sigma_sq, class_probabilities,
    log_weights, neg_log_likelihood, random_symmetric, run_epochs, seeded_rng, Classifier,
    EpochRecord, Learner, PosteriorReport, Prototype, TrainConfig, TrainOutcome, INIT_STREAM,
};
use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{check_dim, Error, Result};
use crate::spd::{arithmetic_mean, sym_eig, SpdMatrix, EIG_FLOOR};

/// Eigenvalue floor applied after every Euclidean update.
pub const DEFAULT_TAU: f64 = 1e-4;

/// Replaces every eigenvalue below `tau` with `tau`.
pub fn project_to_spd(w: &DMatrix<f64>, tau: f64) -> Result<SpdMatrix> {
    check_tau(tau)?;
    let eig = sym_eig(w)?;
    SpdMatrix::from_eigen(eig.map_increasing(|l| l.max(tau)))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > EIG_FLOOR && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "projection floor tau must exceed {EIG_FLOOR:e}, got {tau}"
        )))
    }
}

/// Robust soft LVQ with squared Frobenius distance between matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanRslvqModel {
    prototypes: Vec<Prototype>,
    labels: Vec<ClassId>,
    sigma_sq: f64,
    tau: f64,
    priors: Vec<f64>,
    dim: usize,
    num_classes: usize,
}

impl EuclideanRslvqModel {
    pub fn new(prototypes: Vec<Prototype>, sigma_sq: f64, tau: f64, num_classes: usize) -> Result<Self> {
        check_sigma_sq(sigma_sq)?;
        check_tau(tau)?;
        let m = prototypes.len().max(1);
        let priors = vec![1.0 / m as f64; m];
        let dim = check_prototype_set(&prototypes, &priors, num_classes)?;
        Ok(Self {
            labels: prototypes.iter().map(|p| p.label).collect(),
            prototypes,
            sigma_sq,
            tau,
            priors,
            dim,
            num_classes,
        })
    }

    pub fn prototypes(&self) -> &[Prototype] {
        &self.prototypes
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn log_weights(&self, x: &SpdMatrix) -> Result<Vec<f64>> {
        check_dim(self.dim, x.dim())?;
        let dist_sq: Vec<f64> = self
            .prototypes
            .iter()
            .map(|p| (x.matrix() - p.matrix.matrix()).norm_squared())
            .collect();
        Ok(log_weights(&dist_sq, &self.priors, self.sigma_sq))
    }

    pub fn class_posterior(&self, x: &SpdMatrix) -> Result<PosteriorReport> {
        let log_w = self.log_weights(x)?;
        let class_probs = class_probabilities(&log_w, &self.labels, self.num_classes);
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut prototype_probs: Vec<f64> = log_w.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = prototype_probs.iter().sum();
        prototype_probs.iter_mut().for_each(|p| *p /= total);
        Ok(PosteriorReport {
            predicted: ClassId::from_index(argmax(&class_probs)),
            class_probs,
            prototype_probs,
        })
    }

    /// `w_l ← Π_τ(w_l + (α/σ²) c_l (X − w_l))` for every prototype, with the
    /// same attraction/repulsion coefficients `c_l` as the Riemannian model.
    pub fn sgd_step(&mut self, x: &SpdMatrix, y: ClassId, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "learning rate must lie in (0, 1), got {alpha}"
            )));
        }
        let post = assignment(&self.log_weights(x)?, &self.labels, y)?;
        let mut updated = Vec::with_capacity(self.prototypes.len());
        for (l, proto) in self.prototypes.iter().enumerate() {
            let t = alpha / self.sigma_sq * post.coefficient(l, proto.label == y);
            updated.push(if t == 0.0 {
                None
            } else {
                let w = proto.matrix.matrix();
                Some(project_to_spd(&(w + (x.matrix() - w) * t), self.tau)?)
            });
        }
        for (proto, new) in self.prototypes.iter_mut().zip(updated) {
            if let Some(m) = new {
                proto.matrix = m;
            }
        }
        Ok(())
    }

    pub fn cost(&self, data: &LabeledDataset) -> Result<f64> {
        let mut total = 0.0;
        for (x, y) in data.iter() {
            if !self.labels.contains(&y) {
                return Err(Error::Validation(format!("class {y} has no prototype")));
            }
            total += neg_log_likelihood(&self.log_weights(x)?, &self.labels, y);
        }
        Ok(total)
    }
}

impl Classifier for EuclideanRslvqModel {
    fn predict_class(&self, x: &SpdMatrix) -> Result<ClassId> {
        Ok(self.class_posterior(x)?.predicted)
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }
}

impl Learner for EuclideanRslvqModel {
    fn step(&mut self, x: &SpdMatrix, y: ClassId, alpha: f64) -> Result<()> {
        self.sgd_step(x, y, alpha)
    }

    fn set_sigma_sq(&mut self, sigma_sq: f64) -> Result<()> {
        check_sigma_sq(sigma_sq)?;
        self.sigma_sq = sigma_sq;
        Ok(())
    }

    fn sample_log_weights(&self, x: &SpdMatrix) -> Result<Vec<f64>> {
        self.log_weights(x)
    }

    fn labels(&self) -> &[ClassId] {
        &self.labels
    }
}

fn init_euclidean(data: &LabeledDataset, config: &TrainConfig, tau: f64) -> Result<Vec<Prototype>> {
    data.require_all_classes()?;
    let mut rng = seeded_rng(config.rng_seed, INIT_STREAM);
    let n = data.dim();
    let mut prototypes = Vec::new();
    for (k, members) in data.by_class().iter().enumerate() {
        let mean = arithmetic_mean(members)?;
        for _ in 0..config.prototypes_per_class {
            let matrix = if config.init_perturb_scale == 0.0 {
                mean.clone()
            } else {
                let p = random_symmetric(n, config.init_perturb_scale, &mut rng);
                project_to_spd(&(mean.matrix() + p), tau)?
            };
            prototypes.push(Prototype {
                matrix,
                label: ClassId::from_index(k),
            });
        }
    }
    Ok(prototypes)
}

pub fn euclidean_rslvq_train(
    data: &LabeledDataset,
    config: &TrainConfig,
) -> Result<TrainOutcome<EuclideanRslvqModel>> {
    euclidean_rslvq_train_with(data, config, DEFAULT_TAU, |_, _| {})
}

pub fn euclidean_rslvq_train_with(
    data: &LabeledDataset,
    config: &TrainConfig,
    tau: f64,
    mut observer: impl FnMut(&EpochRecord, &EuclideanRslvqModel),
) -> Result<TrainOutcome<EuclideanRslvqModel>> {
    config.validate(data.dim())?;
    let prototypes = init_euclidean(data, config, tau)?;
    let mut model =
        EuclideanRslvqModel::new(prototypes, config.sigma_sq_opt, tau, data.num_classes())?;
    let history = run_epochs(&mut model, data, config, &mut observer)?;
    Ok(TrainOutcome { model, history })
}
