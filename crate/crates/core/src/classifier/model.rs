use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{check_dim, Error, Result};
use crate::spd::{dist_sq_gradient, geo_distance, GeodesicSegment, SpdMatrix, TangentVector};

use super::mixture::{self, Assignment};
use super::Classifier;

/// A labeled point on the manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub matrix: SpdMatrix,
    pub label: ClassId,
}

/// Class and component posteriors for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorReport {
    pub class_probs: Vec<f64>,
    pub prototype_probs: Vec<f64>,
    pub predicted: ClassId,
}

/// `f(X, W) = -δ²(X, W) / (2σ²)`.
pub fn f_score(x: &SpdMatrix, w: &SpdMatrix, sigma_sq: f64) -> Result<f64> {
    check_sigma_sq(sigma_sq)?;
    let d = geo_distance(x, w)?;
    Ok(-d * d / (2.0 * sigma_sq))
}

pub(crate) fn check_sigma_sq(sigma_sq: f64) -> Result<()> {
    if sigma_sq > 0.0 && sigma_sq.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("sigma^2 must be positive, got {sigma_sq}")))
    }
}

pub(crate) fn check_prototype_set(
    prototypes: &[Prototype],
    priors: &[f64],
    num_classes: usize,
) -> Result<usize> {
    let first = prototypes
        .first()
        .ok_or_else(|| Error::Validation("model needs at least one prototype".into()))?;
    let dim = first.matrix.dim();
    let mut owned = vec![false; num_classes];
    for p in prototypes {
        check_dim(dim, p.matrix.dim())?;
        if p.label.index() >= num_classes {
            return Err(Error::Validation(format!(
                "prototype label {} outside 1..={num_classes}",
                p.label
            )));
        }
        owned[p.label.index()] = true;
    }
    if let Some(k) = owned.iter().position(|o| !o) {
        return Err(Error::Validation(format!(
            "class {} has no prototype",
            ClassId::from_index(k)
        )));
    }
    check_dim(prototypes.len(), priors.len())?;
    if priors.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Validation("priors must be nonnegative".into()));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!("priors sum to {total}, not 1")));
    }
    Ok(dim)
}

/// Probabilistic prototype model on the SPD manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    prototypes: Vec<Prototype>,
    labels: Vec<ClassId>,
    sigma_sq: f64,
    priors: Vec<f64>,
    dim: usize,
    num_classes: usize,
}

impl Model {
    pub fn new(
        prototypes: Vec<Prototype>,
        sigma_sq: f64,
        priors: Vec<f64>,
        num_classes: usize,
    ) -> Result<Self> {
        check_sigma_sq(sigma_sq)?;
        let dim = check_prototype_set(&prototypes, &priors, num_classes)?;
        let labels = prototypes.iter().map(|p| p.label).collect();
        Ok(Self {
            prototypes,
            labels,
            sigma_sq,
            priors,
            dim,
            num_classes,
        })
    }

    /// Model with `P(l) = 1/M`.
    pub fn with_uniform_priors(
        prototypes: Vec<Prototype>,
        sigma_sq: f64,
        num_classes: usize,
    ) -> Result<Self> {
        let m = prototypes.len().max(1);
        Self::new(prototypes, sigma_sq, vec![1.0 / m as f64; m], num_classes)
    }

    pub fn prototypes(&self) -> &[Prototype] {
        &self.prototypes
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn set_sigma_sq(&mut self, sigma_sq: f64) -> Result<()> {
        check_sigma_sq(sigma_sq)?;
        self.sigma_sq = sigma_sq;
        Ok(())
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn replace_prototype(&mut self, index: usize, matrix: SpdMatrix) -> Result<()> {
        check_dim(self.dim, matrix.dim())?;
        let slot = self
            .prototypes
            .get_mut(index)
            .ok_or_else(|| Error::Validation(format!("no prototype {index}")))?;
        slot.matrix = matrix;
        Ok(())
    }

    fn segments(&self, x: &SpdMatrix) -> Result<Vec<GeodesicSegment>> {
        check_dim(self.dim, x.dim())?;
        self.prototypes
            .iter()
            .map(|p| GeodesicSegment::between(&p.matrix, x))
            .collect()
    }

    pub(crate) fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    /// Drops cached factors so the model depends only on its prototype
    /// entries, as it would after a save and reload.
    pub(crate) fn canonicalize(&mut self) -> Result<()> {
        for p in &mut self.prototypes {
            p.matrix = p.matrix.canonical()?;
        }
        Ok(())
    }

    pub(crate) fn log_weights(&self, x: &SpdMatrix) -> Result<Vec<f64>> {
        let dist_sq: Vec<f64> = self
            .segments(x)?
            .iter()
            .map(GeodesicSegment::distance_sq)
            .collect();
        Ok(mixture::log_weights(&dist_sq, &self.priors, self.sigma_sq))
    }

    /// `(P(l | X, y), P(l | X))` for every prototype.
    pub fn posteriors(&self, x: &SpdMatrix, y: ClassId) -> Result<Assignment> {
        mixture::assignment(&self.log_weights(x)?, &self.labels, y)
    }

    /// Class probabilities `p(y | X)` and the winning class.
    pub fn class_posterior(&self, x: &SpdMatrix) -> Result<PosteriorReport> {
        let log_w = self.log_weights(x)?;
        let class_probs = mixture::class_probabilities(&log_w, &self.labels, self.num_classes);
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut prototype_probs: Vec<f64> = log_w.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = prototype_probs.iter().sum();
        prototype_probs.iter_mut().for_each(|p| *p /= total);
        let predicted = ClassId::from_index(mixture::argmax(&class_probs));
        Ok(PosteriorReport {
            class_probs,
            prototype_probs,
            predicted,
        })
    }

    pub fn predict(&self, x: &SpdMatrix) -> Result<PosteriorReport> {
        self.class_posterior(x)
    }

    /// Negative log-likelihood `-ln p(y | X)` of a single labeled sample.
    pub fn sample_cost(&self, x: &SpdMatrix, y: ClassId) -> Result<f64> {
        if !self.labels.contains(&y) {
            return Err(Error::Validation(format!("class {y} has no prototype")));
        }
        Ok(mixture::neg_log_likelihood(&self.log_weights(x)?, &self.labels, y))
    }

    /// Negative log-likelihood of the whole dataset.
    pub fn cost(&self, data: &LabeledDataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Validation("cost of an empty dataset".into()));
        }
        data.iter().map(|(x, y)| self.sample_cost(x, y)).sum()
    }

    /// Riemannian gradient of the single-sample cost with respect to each prototype.
    pub fn objective_gradient(&self, x: &SpdMatrix, y: ClassId) -> Result<Vec<TangentVector>> {
        let post = self.posteriors(x, y)?;
        self.prototypes
            .iter()
            .enumerate()
            .map(|(l, p)| {
                let coef = post.coefficient(l, p.label == y);
                Ok(dist_sq_gradient(&p.matrix, x)?.scale(coef / (2.0 * self.sigma_sq)))
            })
            .collect()
    }

    /// One stochastic Riemannian gradient step on `(x, y)`.
    ///
    /// Posteriors come from the model before the step; every prototype then
    /// moves along its geodesic toward (same class) or away from (other
    /// classes) the sample. On error the model is left untouched.
    pub fn sgd_step(&mut self, x: &SpdMatrix, y: ClassId, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "learning rate must lie in (0, 1), got {alpha}"
            )));
        }
        let segments = self.segments(x)?;
        let dist_sq: Vec<f64> = segments.iter().map(GeodesicSegment::distance_sq).collect();
        let log_w = mixture::log_weights(&dist_sq, &self.priors, self.sigma_sq);
        let post = mixture::assignment(&log_w, &self.labels, y)?;

        let mut updated = Vec::with_capacity(self.prototypes.len());
        for (l, (proto, seg)) in self.prototypes.iter().zip(&segments).enumerate() {
            let same = proto.label == y;
            let coef = post.coefficient(l, same);
            debug_assert!(
                if same { coef >= -1e-12 } else { coef <= 0.0 },
                "update coefficient {coef} has the wrong sign"
            );
            let t = alpha / self.sigma_sq * coef;
            updated.push(if t == 0.0 {
                None
            } else {
                Some(seg.point_at(t)?)
            });
        }
        for (proto, new) in self.prototypes.iter_mut().zip(updated) {
            if let Some(m) = new {
                proto.matrix = m;
            }
        }
        Ok(())
    }
}

impl Classifier for Model {
    fn predict_class(&self, x: &SpdMatrix) -> Result<ClassId> {
        Ok(self.class_posterior(x)?.predicted)
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }
}
