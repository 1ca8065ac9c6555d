use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

/// Sample covariance `E Eᵀ / (l − 1)` of an `n × l` trial after centering
/// each row (channel or feature) to zero mean.
pub fn covariance_from_trial(trial: &DMatrix<f64>) -> Result<SpdMatrix> {
    let (n, l) = trial.shape();
    if n == 0 || l < 2 {
        return Err(Error::Validation(format!(
            "trial must have at least one row and two samples, got {n}x{l}"
        )));
    }
    if trial.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("trial has non-finite entries".into()));
    }
    let mut centered = trial.clone();
    for mut row in centered.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    let cov = &centered * centered.transpose() / (l - 1) as f64;
    SpdMatrix::new(cov).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!(
            "rank-deficient trial ({msg}); add a ridge term or use more samples"
        )),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_rows_give_identity() {
        // rows are zero-mean, orthogonal, with squared norm l - 1 = 3
        let s = 3f64.sqrt() / 2.0;
        let e = DMatrix::from_row_slice(
            2,
            4,
            &[s, -s, s, -s, s, s, -s, -s],
        );
        let x = covariance_from_trial(&e).unwrap();
        assert!((x.matrix() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn scalar_variance() {
        let e = DMatrix::from_row_slice(1, 4, &[1.0, -1.0, 1.0, -1.0]);
        let x = covariance_from_trial(&e).unwrap();
        assert!((x.matrix()[(0, 0)] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn centering_removes_offsets() {
        let e = DMatrix::from_row_slice(1, 4, &[11.0, 9.0, 11.0, 9.0]);
        let x = covariance_from_trial(&e).unwrap();
        assert!((x.matrix()[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_trial_is_a_domain_error() {
        let e = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        match covariance_from_trial(&e) {
            Err(Error::Domain(msg)) => assert!(msg.contains("ridge")),
            other => panic!("{other:?}"),
        }
        assert!(covariance_from_trial(&DMatrix::zeros(2, 1)).is_err());
    }
}
