//! Matrix functions of symmetric matrices, evaluated through the spectrum.

use crate::error::{Error, Result};

use super::matrix::{sym_eig, SpdMatrix, TangentVector, EIG_FLOOR};

/// Largest eigenvalue accepted by [`mat_exp`]; `exp(709)` is near `f64::MAX`.
pub const DEFAULT_EXP_CAP: f64 = 700.0;

/// Matrix exponential of a symmetric matrix.
pub fn mat_exp(v: &TangentVector) -> Result<SpdMatrix> {
    mat_exp_with_cap(v, DEFAULT_EXP_CAP)
}

pub fn mat_exp_with_cap(v: &TangentVector, cap: f64) -> Result<SpdMatrix> {
    let eig = sym_eig(v.matrix())?;
    let top = eig.max_eigenvalue();
    if top > cap {
        return Err(Error::Numerical(format!(
            "matrix exponential overflow: eigenvalue {top} exceeds cap {cap}"
        )));
    }
    SpdMatrix::from_eigen(eig.map_increasing(f64::exp)).map_err(|_| {
        Error::Numerical(format!(
            "matrix exponential underflow: eigenvalue {} maps below {EIG_FLOOR:e}",
            eig.min_eigenvalue()
        ))
    })
}

/// Principal matrix logarithm of an SPD matrix.
pub fn mat_log(x: &SpdMatrix) -> Result<TangentVector> {
    check_floor(x)?;
    Ok(TangentVector::from_symmetric(x.eigen().map(f64::ln)))
}

pub fn mat_sqrt(x: &SpdMatrix) -> Result<SpdMatrix> {
    check_floor(x)?;
    SpdMatrix::from_eigen(x.eigen().map_increasing(f64::sqrt))
}

pub fn mat_invsqrt(x: &SpdMatrix) -> Result<SpdMatrix> {
    check_floor(x)?;
    SpdMatrix::from_symmetric(x.roots().1.clone())
}

fn check_floor(x: &SpdMatrix) -> Result<()> {
    let min = x.eigen().min_eigenvalue();
    if min <= EIG_FLOOR {
        return Err(Error::Domain(format!(
            "eigenvalue {min:e} is not above the floor {EIG_FLOOR:e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = mat_exp(&TangentVector::zeros(3)).unwrap();
        assert!(close(e.matrix(), &DMatrix::identity(3, 3), 1e-15));
    }

    #[test]
    fn exp_diagonal() {
        let e = mat_exp(&TangentVector::from_diagonal(&[0.0, 2f64.ln()])).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert!(close(e.matrix(), &expected, 1e-14));
    }

    #[test]
    fn exp_overflow_is_reported() {
        let v = TangentVector::from_diagonal(&[800.0, 0.0]);
        assert!(matches!(mat_exp(&v), Err(Error::Numerical(_))));
        assert!(matches!(
            mat_exp_with_cap(&TangentVector::from_diagonal(&[5.0]), 4.0),
            Err(Error::Numerical(_))
        ));
        assert!(matches!(
            mat_exp(&TangentVector::from_diagonal(&[-40.0, 0.0])),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn log_identity_and_diagonal() {
        assert!(mat_log(&SpdMatrix::identity(4)).unwrap().frobenius_norm() < 1e-15);
        let e = std::f64::consts::E;
        let l = mat_log(&SpdMatrix::from_diagonal(&[e, e * e]).unwrap()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert!(close(l.matrix(), &expected, 1e-14));
    }

    #[test]
    fn sqrt_and_invsqrt_diagonal() {
        let x = SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let s = mat_sqrt(&x).unwrap();
        let si = mat_invsqrt(&x).unwrap();
        assert!(close(s.matrix(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]), 1e-15));
        assert!(close(
            si.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0 / 3.0]),
            1e-15
        ));
        let id = SpdMatrix::identity(3);
        assert!(close(mat_sqrt(&id).unwrap().matrix(), id.matrix(), 1e-15));
    }
}
