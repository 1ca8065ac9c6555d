use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Relative Frobenius tolerance for reconstructions and round trips.
pub const RECON_TOL: f64 = 1e-8;

/// Eigenvalues at or below this are treated as non-positive.
pub const EIG_FLOOR: f64 = 1e-12;

/// Maximum number of QR sweeps handed to the symmetric eigensolver.
pub const MAX_EIG_SWEEPS: usize = 10_000;

/// Absolute symmetry tolerance for a matrix, scaled by its largest entry.
pub fn sym_tol(m: &DMatrix<f64>) -> f64 {
    1e-9 * (1.0 + m.amax())
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() == 0 {
        return Err(Error::Validation("matrix must be at least 1x1".into()));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::Validation(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    Ok(m.nrows())
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let n = check_square(m)?;
    let tol = sym_tol(m);
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > tol {
                return Err(Error::Validation(format!(
                    "matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e} > {tol:e}"
                )));
            }
        }
    }
    Ok(())
}

/// Spectral decomposition `U diag(λ) Uᵀ` of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors stored as columns, matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|l| l)
    }

    /// Applies `f` to the spectrum: `U diag(f(λ)) Uᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.eigenvalues[j]);
        }
        symmetrize(&(scaled * u.transpose()))
    }

    /// The decomposition of `f(A)` for a strictly increasing `f`.
    pub(crate) fn map_increasing(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.map(f),
            eigenvectors: self.eigenvectors.clone(),
        }
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted ascending.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<EigenDecomposition> {
    check_symmetric(s)?;
    eig_unchecked(symmetrize(s))
}

fn eig_unchecked(s: DMatrix<f64>) -> Result<EigenDecomposition> {
    let n = s.nrows();
    let eig = s
        .try_symmetric_eigen(f64::EPSILON, MAX_EIG_SWEEPS)
        .ok_or(Error::EigenNoConvergence {
            iterations: MAX_EIG_SWEEPS,
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigensolver produced non-finite values".into()));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// A point on the manifold of symmetric positive definite matrices.
///
/// Construction from raw entries validates symmetry and positivity and keeps
/// the eigendecomposition. Points produced along geodesics instead carry a
/// factor `F` with `X = F Fᵀ`, which is all the manifold maps need; the
/// spectrum is then computed on first request.
#[derive(Clone)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    eig: OnceLock<EigenDecomposition>,
    roots: OnceLock<(DMatrix<f64>, DMatrix<f64>)>,
    factor: OnceLock<Factor>,
}

/// `F` and `F⁻¹` with `X = F Fᵀ`.
#[derive(Debug, Clone)]
pub(crate) struct Factor {
    pub(crate) forward: DMatrix<f64>,
    pub(crate) inverse: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&matrix)?;
        Self::from_symmetric(symmetrize(&matrix))
    }

    /// Builds from a matrix already known to be symmetric up to round-off.
    pub(crate) fn from_symmetric(matrix: DMatrix<f64>) -> Result<Self> {
        let eig = eig_unchecked(matrix.clone())?;
        Self::from_parts(matrix, eig)
    }

    pub(crate) fn from_eigen(eig: EigenDecomposition) -> Result<Self> {
        Self::from_parts(eig.reconstruct(), eig)
    }

    /// `F Fᵀ` for an invertible `F`.
    ///
    /// `λ_min(F Fᵀ) ≥ 1 / ‖F⁻¹‖²_F`; when that bound, less the rounding slack
    /// of forming the product, clears the floor the eigendecomposition is
    /// skipped. Otherwise the product is validated like any other input.
    pub(crate) fn from_factor(forward: DMatrix<f64>) -> Result<Self> {
        if forward.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("factor has non-finite entries".into()));
        }
        let inverse = forward
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("factor is singular".into()))?;
        let matrix = symmetrize(&(&forward * forward.transpose()));
        let n = forward.nrows() as f64;
        let lower = 1.0 / inverse.norm_squared();
        let slack = 8.0 * n * f64::EPSILON * forward.norm_squared();
        let point = if lower - slack > EIG_FLOOR {
            Self {
                matrix,
                eig: OnceLock::new(),
                roots: OnceLock::new(),
                factor: OnceLock::new(),
            }
        } else {
            Self::from_symmetric(matrix)?
        };
        let _ = point.factor.set(Factor { forward, inverse });
        Ok(point)
    }

    fn from_parts(matrix: DMatrix<f64>, eig: EigenDecomposition) -> Result<Self> {
        let min = eig.min_eigenvalue();
        if !(min > EIG_FLOOR) {
            return Err(Error::Domain(format!(
                "matrix is not positive definite: smallest eigenvalue {min:e} <= {EIG_FLOOR:e}"
            )));
        }
        Ok(Self {
            matrix,
            eig: OnceLock::from(eig),
            roots: OnceLock::new(),
            factor: OnceLock::new(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts(
            DMatrix::identity(n, n),
            EigenDecomposition {
                eigenvalues: DVector::from_element(n, 1.0),
                eigenvectors: DMatrix::identity(n, n),
            },
        )
        .expect("identity is SPD")
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn from_row_slice(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, values))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Eigendecomposition, computed on first use for factor-built points.
    pub fn eigen(&self) -> &EigenDecomposition {
        self.eig.get_or_init(|| {
            // The QR iteration converges for every finite symmetric matrix.
            eig_unchecked(self.matrix.clone()).expect("eigendecomposition of a finite SPD matrix")
        })
    }

    /// `(X^{1/2}, X^{-1/2})`, computed on first use.
    pub(crate) fn roots(&self) -> &(DMatrix<f64>, DMatrix<f64>) {
        self.roots.get_or_init(|| {
            let eig = self.eigen();
            (eig.map(f64::sqrt), eig.map(|l| 1.0 / l.sqrt()))
        })
    }

    /// A factor `F` with `X = F Fᵀ`; the symmetric square root unless one
    /// was supplied at construction.
    pub(crate) fn factor(&self) -> &Factor {
        self.factor.get_or_init(|| {
            let (sqrt, invsqrt) = self.roots();
            Factor {
                forward: sqrt.clone(),
                inverse: invsqrt.clone(),
            }
        })
    }

    pub(crate) fn inverse(&self) -> DMatrix<f64> {
        let f = &self.factor().inverse;
        symmetrize(&(f.transpose() * f))
    }

    /// The same point rebuilt from its entries alone.
    pub(crate) fn canonical(&self) -> Result<Self> {
        Self::from_symmetric(self.matrix.clone())
    }

    pub(crate) fn check_same_dim(&self, other: &SpdMatrix) -> Result<()> {
        check_dim(self.dim(), other.dim())
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SpdMatrix").field(&self.matrix).finish()
    }
}

/// A symmetric matrix, i.e. an element of the tangent space at any SPD point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(DMatrix<f64>);

impl TangentVector {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&matrix)?;
        Ok(Self(symmetrize(&matrix)))
    }

    pub(crate) fn from_symmetric(matrix: DMatrix<f64>) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self(matrix)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn add(&self, other: &TangentVector) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let eig = sym_eig(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(eig.eigenvalues().as_slice(), &[1.0, 1.0, 1.0]);
        let utu = eig.eigenvectors().transpose() * eig.eigenvectors();
        assert!((utu - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 1.0, 4.0]));
        let eig = sym_eig(&d).unwrap();
        assert_eq!(eig.eigenvalues().as_slice(), &[1.0, 4.0, 9.0]);
        // Each eigenvector is a signed standard basis vector.
        for (col, axis) in eig.eigenvectors().column_iter().zip([1usize, 2, 0]) {
            assert!((col[axis].abs() - 1.0).abs() < 1e-14);
            assert!(col.norm() - 1.0 < 1e-14);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(sym_eig(&m), Err(Error::Validation(_))));
        assert!(matches!(SpdMatrix::new(m), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(sym_eig(&DMatrix::zeros(2, 3)).is_err());
        let mut m = DMatrix::identity(2, 2);
        m[(0, 0)] = f64::NAN;
        assert!(SpdMatrix::new(m).is_err());
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(SpdMatrix::new(m), Err(Error::Domain(_))));
        assert!(matches!(
            SpdMatrix::from_diagonal(&[1.0, 1e-13]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn tolerates_roundoff_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5 + 1e-12, 2.0]);
        let x = SpdMatrix::new(m).unwrap();
        assert_eq!(x.matrix()[(0, 1)], x.matrix()[(1, 0)]);
    }
}
