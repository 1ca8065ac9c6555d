use crate::classifier::Classifier;
use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{check_dim, Error, Result};
use crate::spd::{geo_distance, karcher_mean, SpdMatrix, KARCHER_MAX_ITER, KARCHER_TOL};

/// Minimum distance to Riemannian mean: one Karcher mean per class.
#[derive(Debug, Clone, PartialEq)]
pub struct MdrmModel {
    class_means: Vec<SpdMatrix>,
    dim: usize,
}

impl MdrmModel {
    pub fn from_means(class_means: Vec<SpdMatrix>) -> Result<Self> {
        let dim = class_means
            .first()
            .ok_or_else(|| Error::Validation("MDRM model needs at least one class".into()))?
            .dim();
        for m in &class_means {
            check_dim(dim, m.dim())?;
        }
        Ok(Self { class_means, dim })
    }

    pub fn class_means(&self) -> &[SpdMatrix] {
        &self.class_means
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.class_means.len()
    }
}

pub fn mdrm_train(data: &LabeledDataset) -> Result<MdrmModel> {
    data.require_all_classes()?;
    let means = data
        .by_class()
        .iter()
        .map(|members| karcher_mean(members, KARCHER_TOL, KARCHER_MAX_ITER))
        .collect::<Result<Vec<_>>>()?;
    MdrmModel::from_means(means)
}

/// Class of the nearest mean; ties go to the lower class id.
pub fn mdrm_predict(model: &MdrmModel, x: &SpdMatrix) -> Result<ClassId> {
    check_dim(model.dim, x.dim())?;
    let mut best = (0, f64::INFINITY);
    for (k, mean) in model.class_means.iter().enumerate() {
        let d = geo_distance(mean, x)?;
        if d < best.1 {
            best = (k, d);
        }
    }
    Ok(ClassId::from_index(best.0))
}

impl Classifier for MdrmModel {
    fn predict_class(&self, x: &SpdMatrix) -> Result<ClassId> {
        mdrm_predict(self, x)
    }

    fn num_classes(&self) -> usize {
        self.class_means.len()
    }
}
