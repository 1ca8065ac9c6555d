use std::fmt;

use crate::classifier::Classifier;
use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};

/// Chance-corrected accuracy for `num_classes` balanced classes:
/// `κ = (P_a − 1/C) / (1 − 1/C)`.
pub fn kappa(accuracy: f64, num_classes: usize) -> Result<f64> {
    if num_classes < 2 {
        return Err(Error::Validation(format!(
            "kappa needs at least two classes, got {num_classes}"
        )));
    }
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::Validation(format!(
            "accuracy {accuracy} outside [0, 1]"
        )));
    }
    let chance = 1.0 / num_classes as f64;
    Ok((accuracy - chance) / (1.0 - chance))
}

/// Counts indexed by `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn record(&mut self, truth: ClassId, predicted: ClassId) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.counts.len()).map(|k| self.counts[k][k]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            total => self.correct() as f64 / total as f64,
        }
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>6}")).collect();
            writeln!(f, "{}", cells.join(""))?;
        }
        Ok(())
    }
}

/// Metrics of one trained model on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub accuracy: f64,
    pub kappa: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate<C: Classifier + ?Sized>(classifier: &C, data: &LabeledDataset) -> Result<RunMetrics> {
    let mut confusion = ConfusionMatrix::new(data.num_classes());
    for (x, y) in data.iter() {
        confusion.record(y, classifier.predict_class(x)?);
    }
    let accuracy = confusion.accuracy();
    Ok(RunMetrics {
        accuracy,
        kappa: kappa(accuracy, data.num_classes().max(2))?,
        confusion,
    })
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-run metrics plus their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub runs: Vec<RunMetrics>,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub kappa_mean: f64,
    pub kappa_std: f64,
}

impl MetricsReport {
    pub fn from_runs(runs: Vec<RunMetrics>) -> Self {
        let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let kap: Vec<f64> = runs.iter().map(|r| r.kappa).collect();
        let (accuracy_mean, accuracy_std) = mean_std(&acc);
        let (kappa_mean, kappa_std) = mean_std(&kap);
        Self {
            runs,
            accuracy_mean,
            accuracy_std,
            kappa_mean,
            kappa_std,
        }
    }

    /// Tab-separated per-run table followed by a summary line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("run\taccuracy\tkappa\n");
        for (i, r) in self.runs.iter().enumerate() {
            out.push_str(&format!("{i}\t{:.6}\t{:.6}\n", r.accuracy, r.kappa));
        }
        out.push_str(&format!(
            "# accuracy {:.6} +- {:.6}, kappa {:.6} +- {:.6}\n",
            self.accuracy_mean, self.accuracy_std, self.kappa_mean, self.kappa_std
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_reference_points() {
        assert_eq!(kappa(1.0, 4).unwrap(), 1.0);
        assert_eq!(kappa(0.25, 4).unwrap(), 0.0);
        assert!((kappa(0.6925, 4).unwrap() - 0.59).abs() < 1e-12);
        assert!((kappa(0.0, 4).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!(kappa(0.5, 1).is_err());
        assert!(kappa(1.5, 4).is_err());
    }

    #[test]
    fn confusion_accuracy() {
        let mut c = ConfusionMatrix::new(2);
        let a = ClassId::new(1).unwrap();
        let b = ClassId::new(2).unwrap();
        c.record(a, a);
        c.record(a, b);
        c.record(b, b);
        c.record(b, b);
        assert_eq!(c.total(), 4);
        assert_eq!(c.accuracy(), 0.75);
        assert_eq!(c.counts()[0].iter().sum::<usize>(), 2);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
