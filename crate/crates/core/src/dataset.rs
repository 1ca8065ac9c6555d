use std::fmt;

use crate::error::{check_dim, Error, Result};
use crate::spd::SpdMatrix;

/// A class label in `1..=C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(u32);

impl ClassId {
    pub fn new(label: u32) -> Result<Self> {
        if label == 0 {
            return Err(Error::Validation("class ids start at 1".into()));
        }
        Ok(Self(label))
    }

    pub fn from_index(index: usize) -> Self {
        Self(index as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position of this class.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// SPD samples with labels, all sharing one dimension and class count.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    num_classes: usize,
    samples: Vec<(SpdMatrix, ClassId)>,
}

impl LabeledDataset {
    pub fn new(dim: usize, num_classes: usize, samples: Vec<(SpdMatrix, ClassId)>) -> Result<Self> {
        if dim == 0 || num_classes == 0 {
            return Err(Error::Validation(
                "dataset dimension and class count must be positive".into(),
            ));
        }
        for (x, y) in &samples {
            check_dim(dim, x.dim())?;
            if y.index() >= num_classes {
                return Err(Error::Validation(format!(
                    "label {y} outside 1..={num_classes}"
                )));
            }
        }
        Ok(Self {
            dim,
            num_classes,
            samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(SpdMatrix, ClassId)] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SpdMatrix, ClassId)> {
        self.samples.iter().map(|(x, y)| (x, *y))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for (_, y) in &self.samples {
            counts[y.index()] += 1;
        }
        counts
    }

    /// Samples of each class, indexed by zero-based class position.
    pub fn by_class(&self) -> Vec<Vec<SpdMatrix>> {
        let mut groups = vec![Vec::new(); self.num_classes];
        for (x, y) in &self.samples {
            groups[y.index()].push(x.clone());
        }
        groups
    }

    /// Fails naming the first class with no samples.
    pub fn require_all_classes(&self) -> Result<()> {
        match self.class_counts().iter().position(|&c| c == 0) {
            Some(k) => Err(Error::Validation(format!(
                "class {} has no samples",
                ClassId::from_index(k)
            ))),
            None => Ok(()),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            num_classes: self.num_classes,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    pub fn concat(&self, other: &LabeledDataset) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        if self.num_classes != other.num_classes {
            return Err(Error::Validation(format!(
                "cannot join datasets with {} and {} classes",
                self.num_classes, other.num_classes
            )));
        }
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().cloned());
        Ok(Self {
            dim: self.dim,
            num_classes: self.num_classes,
            samples,
        })
    }
}
