//! Soft assignments of a sample to the components of a prototype mixture.
//!
//! Shared by every prototype model in the crate; only the distance used to
//! produce `dist_sq` differs between them.

use crate::dataset::ClassId;
use crate::error::{Error, Result};

/// `ln P(l) - d_l² / (2σ²)` for every component.
pub(crate) fn log_weights(dist_sq: &[f64], priors: &[f64], sigma_sq: f64) -> Vec<f64> {
    dist_sq
        .iter()
        .zip(priors)
        .map(|(d, p)| p.ln() - d / (2.0 * sigma_sq))
        .collect()
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Posterior over components, restricted to class `y` and over all components.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `P(l | X, y)`; zero for components of other classes.
    pub class_conditional: Vec<f64>,
    /// `P(l | X)`.
    pub overall: Vec<f64>,
}

impl Assignment {
    /// Update coefficient for component `l`: `P(l|X,y) - P(l|X)` if it carries
    /// label `y`, otherwise `-P(l|X)`.
    pub fn coefficient(&self, l: usize, same_class: bool) -> f64 {
        if same_class {
            self.class_conditional[l] - self.overall[l]
        } else {
            -self.overall[l]
        }
    }
}

pub(crate) fn assignment(log_w: &[f64], labels: &[ClassId], y: ClassId) -> Result<Assignment> {
    if !labels.contains(&y) {
        return Err(Error::Validation(format!(
            "class {y} is not represented by any prototype"
        )));
    }
    let max_all = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_class = log_w
        .iter()
        .zip(labels)
        .filter(|(_, c)| **c == y)
        .map(|(w, _)| *w)
        .fold(f64::NEG_INFINITY, f64::max);

    let shifted_all: Vec<f64> = log_w.iter().map(|w| (w - max_all).exp()).collect();
    let total: f64 = shifted_all.iter().sum();
    let overall = shifted_all.iter().map(|w| w / total).collect();

    let shifted_class: Vec<f64> = log_w
        .iter()
        .zip(labels)
        .map(|(w, c)| {
            if *c == y && max_class.is_finite() {
                (w - max_class).exp()
            } else {
                0.0
            }
        })
        .collect();
    let class_total: f64 = shifted_class.iter().sum();
    let class_conditional = shifted_class
        .iter()
        .map(|w| if class_total > 0.0 { w / class_total } else { 0.0 })
        .collect();

    Ok(Assignment {
        class_conditional,
        overall,
    })
}

/// `p(k | X)` for each class `k`.
pub(crate) fn class_probabilities(log_w: &[f64], labels: &[ClassId], num_classes: usize) -> Vec<f64> {
    let max_all = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs = vec![0.0; num_classes];
    for (w, c) in log_w.iter().zip(labels) {
        probs[c.index()] += (w - max_all).exp();
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

/// Position of the largest entry; ties resolve to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `-ln p(y | X)` from component log-weights.
pub(crate) fn neg_log_likelihood(log_w: &[f64], labels: &[ClassId], y: ClassId) -> f64 {
    let class = log_sum_exp(
        log_w
            .iter()
            .zip(labels)
            .filter(move |(_, c)| **c == y)
            .map(|(w, _)| *w),
    );
    let all = log_sum_exp(log_w.iter().copied());
    all - class
}
