//! Affine-invariant Riemannian geometry of the SPD cone.
//!
//! Every map is evaluated through a congruence `F⁻¹ · F⁻ᵀ` with a factor
//! `B = F Fᵀ` of the base point, so each eigendecomposition acts on a symmetric
//! matrix. For points built from entries `F` is the symmetric root `B^{1/2}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

use super::functions::DEFAULT_EXP_CAP;
use super::matrix::{sym_eig, symmetrize, SpdMatrix, TangentVector, EIG_FLOOR};

/// Affine-invariant inner product `Tr(V₁ B⁻¹ V₂ B⁻¹)` at `base`.
pub fn inner(base: &SpdMatrix, v1: &TangentVector, v2: &TangentVector) -> Result<f64> {
    check_dim(base.dim(), v1.dim())?;
    check_dim(base.dim(), v2.dim())?;
    let inv = base.inverse();
    let a = v1.matrix() * &inv;
    let b = v2.matrix() * &inv;
    // Tr(AB) = Σ_ij A_ij B_ji
    Ok(a.component_mul(&b.transpose()).sum())
}

/// Norm of `v` induced by [`inner`] at `base`.
pub fn norm(base: &SpdMatrix, v: &TangentVector) -> Result<f64> {
    Ok(inner(base, v, v)?.max(0.0).sqrt())
}

/// Point at time `t` on the geodesic leaving `base` with velocity `v`.
pub fn geodesic(base: &SpdMatrix, v: &TangentVector, t: f64) -> Result<SpdMatrix> {
    exp_map(base, &v.scale(t))
}

/// Riemannian exponential map `B^{1/2} exp(B^{-1/2} V B^{-1/2}) B^{1/2}`.
pub fn exp_map(base: &SpdMatrix, v: &TangentVector) -> Result<SpdMatrix> {
    check_dim(base.dim(), v.dim())?;
    let factor = base.factor();
    let whitened = symmetrize(&(&factor.inverse * v.matrix() * factor.inverse.transpose()));
    let eig = sym_eig(&whitened)?;
    let top = eig.max_eigenvalue();
    if top > DEFAULT_EXP_CAP {
        return Err(Error::Numerical(format!(
            "exponential map overflow: eigenvalue {top} exceeds cap {DEFAULT_EXP_CAP}"
        )));
    }
    let frame = &factor.forward * eig.eigenvectors();
    SpdMatrix::from_symmetric(spectral_congruence(&frame, eig.eigenvalues(), f64::exp))
}

/// Riemannian logarithm map `B^{1/2} log(B^{-1/2} X B^{-1/2}) B^{1/2}`.
pub fn log_map(base: &SpdMatrix, x: &SpdMatrix) -> Result<TangentVector> {
    Ok(GeodesicSegment::between(base, x)?.log_map())
}

/// Geodesic distance `‖log(X₁^{-1/2} X₂ X₁^{-1/2})‖_F`.
pub fn geo_distance(x1: &SpdMatrix, x2: &SpdMatrix) -> Result<f64> {
    Ok(GeodesicSegment::between(x1, x2)?.distance_sq().sqrt())
}

/// Riemannian gradient of `W ↦ δ²(W, X)` at `W`, equal to `-2 Log_W(X)`.
pub fn dist_sq_gradient(w: &SpdMatrix, x: &SpdMatrix) -> Result<TangentVector> {
    Ok(log_map(w, x)?.scale(-2.0))
}

/// The geodesic from `base` to `target`, in spectral form.
///
/// Holds `F U` and the eigenvalues `λ` of `F⁻¹ X F⁻ᵀ = U diag(λ) Uᵀ`, from
/// which the distance, the logarithm map, and any point
/// `F U diag(λᵗ) Uᵀ Fᵀ` along the curve follow without further
/// decompositions.
#[derive(Debug, Clone)]
pub struct GeodesicSegment {
    frame: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl GeodesicSegment {
    pub fn between(base: &SpdMatrix, target: &SpdMatrix) -> Result<Self> {
        base.check_same_dim(target)?;
        let factor = base.factor();
        let whitened =
            symmetrize(&(&factor.inverse * target.matrix() * factor.inverse.transpose()));
        let eig = sym_eig(&whitened)?;
        let min = eig.min_eigenvalue();
        if min <= EIG_FLOOR {
            return Err(Error::Domain(format!(
                "relative eigenvalue {min:e} is not above the floor {EIG_FLOOR:e}"
            )));
        }
        Ok(Self {
            frame: &factor.forward * eig.eigenvectors(),
            eigenvalues: eig.eigenvalues().clone(),
        })
    }

    pub fn distance_sq(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.ln().powi(2)).sum()
    }

    pub fn log_map(&self) -> TangentVector {
        TangentVector::from_symmetric(spectral_congruence(&self.frame, &self.eigenvalues, f64::ln))
    }

    /// `Exp_B(t · Log_B(X))`; `t = 1` recovers the target.
    ///
    /// The result carries the factor `F U diag(λ^{t/2})`, so it can serve as
    /// the next base point without another decomposition.
    pub fn point_at(&self, t: f64) -> Result<SpdMatrix> {
        let mut forward = self.frame.clone();
        for (j, mut col) in forward.column_iter_mut().enumerate() {
            col *= self.eigenvalues[j].powf(0.5 * t);
        }
        SpdMatrix::from_factor(forward)
    }
}

/// `F diag(f(λ)) Fᵀ`, symmetrized.
fn spectral_congruence(
    frame: &DMatrix<f64>,
    eigenvalues: &DVector<f64>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let mut scaled = frame.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= f(eigenvalues[j]);
    }
    symmetrize(&(scaled * frame.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::{mat_exp, mat_log};

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    fn sample() -> SpdMatrix {
        SpdMatrix::from_row_slice(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap()
    }

    #[test]
    fn inner_at_identity_is_frobenius() {
        let v = TangentVector::from_diagonal(&[1.0, 1.0]);
        assert!((inner(&SpdMatrix::identity(2), &v, &v).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn inner_dimension_mismatch() {
        let err = inner(&SpdMatrix::identity(2), &TangentVector::zeros(3), &TangentVector::zeros(2));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn geodesic_endpoints() {
        let x = sample();
        let v = TangentVector::from_diagonal(&[0.3, -0.2, 0.1]);
        assert!(close(geodesic(&x, &v, 0.0).unwrap().matrix(), x.matrix(), 1e-12));
        let half = geodesic(
            &SpdMatrix::identity(2),
            &TangentVector::from_diagonal(&[2.0 * 2f64.ln(), 0.0]),
            0.5,
        )
        .unwrap();
        assert!(close(half.matrix(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]), 1e-14));
    }

    #[test]
    fn distance_to_self_and_diagonal() {
        let x = sample();
        assert!(geo_distance(&x, &x).unwrap() < 1e-7);
        let e2 = std::f64::consts::E.powi(2);
        let d = geo_distance(&SpdMatrix::identity(2), &SpdMatrix::from_diagonal(&[e2, 1.0]).unwrap())
            .unwrap();
        assert!((d - 2.0).abs() < 1e-14);
    }

    #[test]
    fn distance_dimension_mismatch() {
        assert!(matches!(
            geo_distance(&SpdMatrix::identity(2), &SpdMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn maps_collapse_at_identity() {
        let x = sample();
        let id = SpdMatrix::identity(3);
        let v = TangentVector::new(x.matrix() * 0.1).unwrap();
        assert!(close(exp_map(&id, &v).unwrap().matrix(), mat_exp(&v).unwrap().matrix(), 1e-13));
        assert!(close(log_map(&id, &x).unwrap().matrix(), mat_log(&x).unwrap().matrix(), 1e-13));
        assert!(close(exp_map(&x, &TangentVector::zeros(3)).unwrap().matrix(), x.matrix(), 1e-13));
        assert!(log_map(&x, &x).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn gradient_diagonal() {
        let e2 = std::f64::consts::E.powi(2);
        let g = dist_sq_gradient(&SpdMatrix::identity(2), &SpdMatrix::from_diagonal(&[e2, 1.0]).unwrap())
            .unwrap();
        assert!(close(g.matrix(), &DMatrix::from_row_slice(2, 2, &[-4.0, 0.0, 0.0, 0.0]), 1e-14));
        let x = sample();
        assert!(dist_sq_gradient(&x, &x).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn segment_point_at_one_is_target() {
        let a = sample();
        let b = SpdMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let seg = GeodesicSegment::between(&a, &b).unwrap();
        assert!(close(seg.point_at(1.0).unwrap().matrix(), b.matrix(), 1e-12));
        assert!(close(seg.point_at(0.0).unwrap().matrix(), a.matrix(), 1e-12));
    }
}
