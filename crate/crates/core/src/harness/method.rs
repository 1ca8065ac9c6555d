use std::fmt;
use std::str::FromStr;

use crate::baselines::{euclidean_rslvq_train_with, mdrm_train, EuclideanRslvqModel, MdrmModel, DEFAULT_TAU};
use crate::classifier::{error_rate, train_with, AnnealMode, Classifier, EpochRecord, Model, TrainConfig};
use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

/// The classifiers the harness can train and persist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Riemannian prototypes with a fixed σ².
    PlrsqConst,
    /// Riemannian prototypes with an annealed σ².
    PlrsqAn,
    /// Nearest Karcher class mean.
    Mdrm,
    /// Frobenius-distance prototypes projected onto the SPD cone.
    RslvqEuclidean,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::PlrsqConst,
        Method::PlrsqAn,
        Method::Mdrm,
        Method::RslvqEuclidean,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::PlrsqConst => "plrsq-const",
            Method::PlrsqAn => "plrsq-an",
            Method::Mdrm => "mdrm",
            Method::RslvqEuclidean => "rslvq-euclidean",
        }
    }

    /// Whether the method has hyperparameters and an epoch loop.
    pub fn is_iterative(self) -> bool {
        self != Method::Mdrm
    }

    /// `config` with the annealing mode the method implies. Annealed runs keep
    /// an explicitly chosen constant-β schedule.
    pub fn configure(self, config: &TrainConfig) -> TrainConfig {
        let mut c = config.clone();
        match self {
            Method::PlrsqConst => c.annealing = AnnealMode::Off,
            Method::PlrsqAn if c.annealing == AnnealMode::Off => c.annealing = AnnealMode::Geometric,
            _ => {}
        }
        c
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method '{s}'; expected one of plrsq-const, plrsq-an, mdrm, rslvq-euclidean"
                ))
            })
    }
}

/// A trained model of any [`Method`].
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Plrsq { method: Method, model: Model },
    Mdrm(MdrmModel),
    Euclidean(EuclideanRslvqModel),
}

impl TrainedModel {
    pub fn method(&self) -> Method {
        match self {
            TrainedModel::Plrsq { method, .. } => *method,
            TrainedModel::Mdrm(_) => Method::Mdrm,
            TrainedModel::Euclidean(_) => Method::RslvqEuclidean,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedModel::Plrsq { model, .. } => model.dim(),
            TrainedModel::Mdrm(m) => m.dim(),
            TrainedModel::Euclidean(m) => m.dim(),
        }
    }

    /// Class probabilities, or `None` for the distance-only MDRM.
    pub fn class_probs(&self, x: &SpdMatrix) -> Result<Option<Vec<f64>>> {
        Ok(match self {
            TrainedModel::Plrsq { model, .. } => Some(model.class_posterior(x)?.class_probs),
            TrainedModel::Mdrm(_) => None,
            TrainedModel::Euclidean(m) => Some(m.class_posterior(x)?.class_probs),
        })
    }
}

impl Classifier for TrainedModel {
    fn predict_class(&self, x: &SpdMatrix) -> Result<ClassId> {
        match self {
            TrainedModel::Plrsq { model, .. } => model.predict_class(x),
            TrainedModel::Mdrm(m) => m.predict_class(x),
            TrainedModel::Euclidean(m) => m.predict_class(x),
        }
    }

    fn num_classes(&self) -> usize {
        match self {
            TrainedModel::Plrsq { model, .. } => Classifier::num_classes(model),
            TrainedModel::Mdrm(m) => m.num_classes(),
            TrainedModel::Euclidean(m) => Classifier::num_classes(m),
        }
    }
}

/// One row of a training history.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub cost: f64,
    pub train_err: f64,
    pub test_err: Option<f64>,
    pub sigma_sq: f64,
    pub alpha: f64,
}

pub const HISTORY_HEADER: &str = "epoch\tcost\ttrain_err\ttest_err\tsigma_sq\talpha";

/// Tab-separated history with [`HISTORY_HEADER`]; a missing test error is `NaN`.
pub fn history_tsv(rows: &[HistoryRow]) -> String {
    let mut out = format!("{HISTORY_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{:.10e}\t{:.6}\t{:.6}\t{:.10e}\t{:.10e}\n",
            r.epoch,
            r.cost,
            r.train_err,
            r.test_err.unwrap_or(f64::NAN),
            r.sigma_sq,
            r.alpha
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: TrainedModel,
    pub history: Vec<HistoryRow>,
}

/// Trains `method` on `train`. With `config.track_history` set, every epoch
/// is recorded, including the error on `monitor` when given.
///
/// MDRM has no epochs and returns an empty history.
pub fn fit(
    method: Method,
    train: &LabeledDataset,
    config: &TrainConfig,
    monitor: Option<&LabeledDataset>,
) -> Result<Fitted> {
    let config = method.configure(config);
    let mut history = Vec::new();
    let mut monitor_err: Option<Error> = None;
    let mut record = |rec: &EpochRecord, model: &dyn Classifier| {
        let (Some(cost), Some(train_err)) = (rec.cost, rec.train_error) else {
            return;
        };
        let test_err = match monitor {
            Some(data) if monitor_err.is_none() => match error_rate(model, data) {
                Ok(e) => Some(e),
                Err(e) => {
                    monitor_err = Some(e);
                    None
                }
            },
            _ => None,
        };
        history.push(HistoryRow {
            epoch: rec.epoch,
            cost,
            train_err,
            test_err,
            sigma_sq: rec.sigma_sq,
            alpha: rec.alpha,
        });
    };
    let model = match method {
        Method::PlrsqConst | Method::PlrsqAn => {
            let out = train_with(train, &config, |r, m| record(r, m))?;
            TrainedModel::Plrsq {
                method,
                model: out.model,
            }
        }
        Method::Mdrm => TrainedModel::Mdrm(mdrm_train(train)?),
        Method::RslvqEuclidean => {
            let out = euclidean_rslvq_train_with(train, &config, DEFAULT_TAU, |r, m| record(r, m))?;
            TrainedModel::Euclidean(out.model)
        }
    };
    if let Some(e) = monitor_err {
        return Err(e);
    }
    Ok(Fitted { model, history })
}
