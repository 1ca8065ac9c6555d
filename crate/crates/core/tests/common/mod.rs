//! Random inputs and independent reference computations shared by the
//! integration tests.
//!
//! The reference paths avoid the library's congruence machinery: distances go
//! through a Cholesky factor, matrix functions through nalgebra's own
//! eigensolver, and random SPD matrices are assembled as `Q diag(λ) Qᵀ`.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use plrsq_core::spd::{
    dist_sq_gradient, exp_map, geo_distance, geodesic, inner, karcher_mean, log_map, mat_exp,
    mat_log, norm, TangentVector, EIG_FLOOR, KARCHER_MAX_ITER, KARCHER_TOL,
};
use plrsq_core::SpdMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const DIMS: [usize; 4] = [2, 3, 5, 10];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(n: usize, m: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(rng))
}

pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    gaussian(n, n, rng).qr().q()
}

/// `Q diag(λ) Qᵀ` with `ln λ` uniform in `[-spread, spread]`.
pub fn random_spd_with(n: usize, spread: f64, rng: &mut impl Rng) -> SpdMatrix {
    let q = random_orthogonal(n, rng);
    let lambda = DVector::from_fn(n, |_, _| rng.random_range(-spread..=spread).exp());
    let m = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    SpdMatrix::new((&m + m.transpose()) * 0.5).expect("random SPD")
}

pub fn random_spd(n: usize, rng: &mut impl Rng) -> SpdMatrix {
    random_spd_with(n, 1.5, rng)
}

pub fn random_symmetric(n: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = gaussian(n, n, rng) * scale;
    (&a + a.transpose()) * 0.5
}

pub fn random_tangent(n: usize, scale: f64, rng: &mut impl Rng) -> TangentVector {
    TangentVector::new(random_symmetric(n, scale, rng)).unwrap()
}

/// `Q₁ diag(s) Q₂` with singular values in `[e⁻¹, e]`.
pub fn random_invertible(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0f64).exp());
    random_orthogonal(n, rng) * DMatrix::from_diagonal(&s) * random_orthogonal(n, rng)
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// `δ(X, Y)` from the generalized eigenvalues of `(Y, X)` via `X = L Lᵀ`.
pub fn oracle_distance(x: &SpdMatrix, y: &SpdMatrix) -> f64 {
    let l = x.matrix().clone().cholesky().expect("SPD").l();
    let linv = l.try_inverse().expect("invertible");
    let m = &linv * y.matrix() * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    m.symmetric_eigenvalues().iter().map(|v| v.ln().powi(2)).sum::<f64>().sqrt()
}

pub fn congruence(x: &SpdMatrix, w: &DMatrix<f64>) -> SpdMatrix {
    let m = w.transpose() * x.matrix() * w;
    SpdMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

/// The SpdMatrix invariants checked from scratch.
pub fn satisfies_spd_invariants(x: &SpdMatrix) -> Result<(), String> {
    let m = x.matrix();
    let tol = 1e-9 * (1.0 + m.amax());
    if (m - m.transpose()).amax() > tol {
        return Err("asymmetric".into());
    }
    let min = m.clone().symmetric_eigenvalues().min();
    if !(min > EIG_FLOOR) {
        return Err(format!("smallest eigenvalue {min:e}"));
    }
    Ok(())
}

fn ok<T>(r: plrsq_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

/// Round trips, metric axioms, affine invariance, norm/distance consistency
/// and SPD closure for one random configuration in dimension `n`.
pub fn geometry_case(n: usize, rng: &mut impl Rng) -> Result<(), String> {
    let x = random_spd(n, rng);
    let y = random_spd(n, rng);
    let z = random_spd(n, rng);

    let back = ok(mat_exp(&ok(mat_log(&x))?))?;
    ensure!(rel_err(back.matrix(), x.matrix()) <= 1e-8, "mat_exp(mat_log(X)) != X");
    let v = ok(log_map(&x, &y))?;
    let y2 = ok(exp_map(&x, &v))?;
    ensure!(rel_err(y2.matrix(), y.matrix()) <= 1e-8, "exp_map(X, log_map(X, Y)) != Y");
    let t = random_tangent(n, 0.5, rng);
    let t2 = ok(log_map(&x, &ok(exp_map(&x, &t))?))?;
    ensure!(rel_err(t2.matrix(), t.matrix()) <= 1e-8, "log_map(X, exp_map(X, V)) != V");

    let dxy = ok(geo_distance(&x, &y))?;
    let dyx = ok(geo_distance(&y, &x))?;
    let dxz = ok(geo_distance(&x, &z))?;
    let dyz = ok(geo_distance(&y, &z))?;
    ensure!(dxy > 0.0, "distance between distinct points is {dxy}");
    ensure!(ok(geo_distance(&x, &x))? <= 1e-7, "δ(X, X) != 0");
    ensure!((dxy - dyx).abs() <= 1e-8 * (1.0 + dxy), "asymmetric distance {dxy} vs {dyx}");
    ensure!(dxz <= dxy + dyz + 1e-8, "triangle inequality {dxz} > {dxy} + {dyz}");
    let oracle = oracle_distance(&x, &y);
    ensure!((dxy - oracle).abs() <= 1e-8 * (1.0 + oracle), "δ {dxy} vs oracle {oracle}");

    let w = random_invertible(n, rng);
    let dw = ok(geo_distance(&congruence(&x, &w), &congruence(&y, &w)))?;
    ensure!((dw - dxy).abs() <= 1e-8 * (1.0 + dxy), "affine invariance {dw} vs {dxy}");

    let nv = ok(norm(&x, &v))?;
    ensure!((nv - dxy).abs() <= 1e-8 * (1.0 + dxy), "‖log_map‖ {nv} vs δ {dxy}");

    for s in [-1.5, 0.3, 0.5, 2.0] {
        satisfies_spd_invariants(&ok(geodesic(&x, &v, s))?).map_err(|m| format!("geodesic({s}): {m}"))?;
    }
    satisfies_spd_invariants(&ok(exp_map(&x, &t))?)?;
    satisfies_spd_invariants(&ok(karcher_mean(&[x, y, z], KARCHER_TOL, KARCHER_MAX_ITER))?)?;
    Ok(())
}

/// Central difference of `δ²(X, ·)` along a unit direction at `W` against
/// `⟨V, grad⟩_W`, with step `h = 1e-4`. Returns the error relative to
/// `max(|⟨V, grad⟩_W|, ‖grad‖_W)`.
pub fn dist_sq_gradient_case(n: usize, rng: &mut impl Rng) -> Result<f64, String> {
    let w = random_spd(n, rng);
    let x = random_spd(n, rng);
    let raw = random_tangent(n, 1.0, rng);
    let v = raw.scale(1.0 / ok(norm(&w, &raw))?);
    let h = 1e-4;
    let f = |s: f64| -> Result<f64, String> {
        let p = ok(geodesic(&w, &v, s))?;
        Ok(ok(geo_distance(&x, &p))?.powi(2))
    };
    let fd = (f(h)? - f(-h)?) / (2.0 * h);
    let grad = ok(dist_sq_gradient(&w, &x))?;
    let analytic = ok(inner(&w, &v, &grad))?;
    let scale = analytic.abs().max(ok(norm(&w, &grad))?).max(1e-8);
    Ok((fd - analytic).abs() / scale)
}

pub fn diag(values: &[f64]) -> SpdMatrix {
    SpdMatrix::from_diagonal(values).unwrap()
}

/// A random model with `classes` classes and one or two prototypes each.
pub fn random_model(n: usize, classes: usize, rng: &mut impl Rng) -> plrsq_core::Model {
    use plrsq_core::{ClassId, Model, Prototype};
    let mut prototypes = Vec::new();
    for k in 0..classes {
        for _ in 0..rng.random_range(1..=2) {
            prototypes.push(Prototype {
                matrix: random_spd_with(n, 0.5, rng),
                label: ClassId::from_index(k),
            });
        }
    }
    Model::with_uniform_priors(prototypes, rng.random_range(0.5..3.0), classes).unwrap()
}

/// Checks one random `(model, sample)` pair: the central difference of the
/// single-sample cost along a unit direction at one prototype against the
/// assembled gradient, and the stochastic update against
/// `exp_map(W, -α ∇)`. Returns `(gradient relative error, update relative error)`.
pub fn model_gradient_case(n: usize, rng: &mut impl Rng) -> Result<(f64, f64), String> {
    use plrsq_core::ClassId;
    let classes = rng.random_range(2..=3);
    let model = random_model(n, classes, rng);
    let x = random_spd_with(n, 0.5, rng);
    let y = ClassId::from_index(rng.random_range(0..classes));
    let grads = ok(model.objective_gradient(&x, y))?;
    let l = rng.random_range(0..grads.len());
    let w = model.prototypes()[l].matrix.clone();
    let raw = random_tangent(n, 1.0, rng);
    let v = raw.scale(1.0 / ok(norm(&w, &raw))?);

    let h = 1e-4;
    let cost_at = |s: f64| -> Result<f64, String> {
        let mut m = model.clone();
        ok(m.replace_prototype(l, ok(geodesic(&w, &v, s))?))?;
        ok(m.sample_cost(&x, y))
    };
    let fd = (cost_at(h)? - cost_at(-h)?) / (2.0 * h);
    let analytic = ok(inner(&w, &v, &grads[l]))?;
    let scale = analytic.abs().max(ok(norm(&w, &grads[l]))?).max(1e-8);
    let grad_err = (fd - analytic).abs() / scale;

    let alpha = 0.05;
    let mut stepped = model.clone();
    ok(stepped.sgd_step(&x, y, alpha))?;
    let mut update_err: f64 = 0.0;
    for (k, g) in grads.iter().enumerate() {
        let base = &model.prototypes()[k].matrix;
        let expected = ok(exp_map(base, &g.scale(-alpha)))?;
        update_err = update_err.max(rel_err(stepped.prototypes()[k].matrix.matrix(), expected.matrix()));
    }
    Ok((grad_err, update_err))
}
