//! Geometry of the manifold of symmetric positive definite matrices under the
//! affine-invariant metric.

mod functions;
mod manifold;
mod matrix;
mod mean;

pub use functions::{mat_exp, mat_exp_with_cap, mat_invsqrt, mat_log, mat_sqrt, DEFAULT_EXP_CAP};
pub use manifold::{
    dist_sq_gradient, exp_map, geo_distance, geodesic, inner, log_map, norm, GeodesicSegment,
};
pub use matrix::{
    sym_eig, sym_tol, EigenDecomposition, SpdMatrix, TangentVector, EIG_FLOOR, MAX_EIG_SWEEPS,
    RECON_TOL,
};
pub use mean::{karcher_mean, KARCHER_MAX_ITER, KARCHER_TOL};

pub(crate) use mean::arithmetic_mean;
