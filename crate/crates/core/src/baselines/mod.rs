//! Reference classifiers: nearest Riemannian class mean, and robust soft LVQ
//! under the Euclidean (Frobenius) distance with prototypes projected back
//! onto the SPD cone.

mod euclidean;
mod mdrm;

pub use euclidean::{
    euclidean_rslvq_train, euclidean_rslvq_train_with, project_to_spd, EuclideanRslvqModel,
    DEFAULT_TAU,
};
pub use mdrm::{mdrm_predict, mdrm_train, MdrmModel};
