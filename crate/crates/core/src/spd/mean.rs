use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};

use super::manifold::{exp_map, log_map};
use super::matrix::{SpdMatrix, TangentVector};

pub const KARCHER_TOL: f64 = 1e-9;
pub const KARCHER_MAX_ITER: usize = 200;

/// Karcher (Fréchet) mean under the affine-invariant metric.
///
/// Fixed-point iteration `M ← Exp_M(mean_i Log_M(X_i))` started from the
/// arithmetic mean, stopping once the Frobenius norm of the averaged tangent
/// vector drops below `tol`.
pub fn karcher_mean(points: &[SpdMatrix], tol: f64, max_iter: usize) -> Result<SpdMatrix> {
    let first = points
        .first()
        .ok_or_else(|| Error::Validation("Karcher mean of an empty set".into()))?;
    let n = first.dim();
    for p in points {
        check_dim(n, p.dim())?;
    }
    if points.len() == 1 {
        return Ok(first.clone());
    }

    let mut mean = arithmetic_mean(points)?;
    let mut residual = f64::INFINITY;
    for _ in 0..=max_iter {
        let step = tangent_average(&mean, points)?;
        residual = step.frobenius_norm();
        if residual < tol {
            return Ok(mean);
        }
        mean = exp_map(&mean, &step)?;
    }
    Err(Error::KarcherNoConvergence {
        iterations: max_iter,
        residual,
        last: Box::new(mean),
    })
}

pub(crate) fn arithmetic_mean(points: &[SpdMatrix]) -> Result<SpdMatrix> {
    let n = points[0].dim();
    let sum = points
        .iter()
        .fold(DMatrix::zeros(n, n), |acc, p| acc + p.matrix());
    SpdMatrix::new(sum / points.len() as f64)
}

fn tangent_average(at: &SpdMatrix, points: &[SpdMatrix]) -> Result<TangentVector> {
    let n = at.dim();
    let mut sum = DMatrix::zeros(n, n);
    for p in points {
        sum += log_map(at, p)?.into_matrix();
    }
    Ok(TangentVector::from_symmetric(sum / points.len() as f64))
}
