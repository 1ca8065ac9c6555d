use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

const BASIS_STREAM_TAG: u64 = 1 << 56;
const INSTANCE_STREAM_TAG: u64 = 2 << 56;

/// One of the four eigenvalue profiles, normalized to mean 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenProfile {
    pub profile_id: u8,
    pub values: Vec<f64>,
}

impl EigenProfile {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Raw profile values for `j = 1..=n`, then rescaled so their mean is 1.
///
/// 1: `13 - j`, 2: `1 + 100 e^{-j/2}`, 3: `13 - j/2`, 4: `1/j`.
pub fn eigen_profile(profile_id: u8, n: usize) -> Result<EigenProfile> {
    if n == 0 {
        return Err(Error::Validation("profile dimension must be positive".into()));
    }
    let raw: Vec<f64> = (1..=n)
        .map(|j| {
            let j = j as f64;
            match profile_id {
                1 => Ok(13.0 - j),
                2 => Ok(1.0 + 100.0 * (-0.5 * j).exp()),
                3 => Ok(13.0 - 0.5 * j),
                4 => Ok(1.0 / j),
                other => Err(Error::Validation(format!("unknown eigenvalue profile {other}"))),
            }
        })
        .collect::<Result<_>>()?;
    if raw.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Validation(format!(
            "profile {profile_id} is not positive for n = {n}"
        )));
    }
    let sum: f64 = raw.iter().sum();
    Ok(EigenProfile {
        profile_id,
        values: raw.iter().map(|v| n as f64 * v / sum).collect(),
    })
}

/// An orthonormal set of `n` column vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    columns: DMatrix<f64>,
}

impl OrthoBasis {
    pub fn standard(n: usize) -> Self {
        Self {
            columns: DMatrix::identity(n, n),
        }
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass, in column order.
/// Returns `None` when a column is numerically dependent on its predecessors.
pub(crate) fn gram_schmidt(mut m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    for j in 0..m.ncols() {
        let original = m.column(j).norm();
        for _pass in 0..2 {
            for k in 0..j {
                let proj = m.column(k).dot(&m.column(j));
                let qk = m.column(k).clone_owned();
                m.column_mut(j).axpy(-proj, &qk, 1.0);
            }
        }
        let norm = m.column(j).norm();
        if !(norm > 1e-10 * original.max(f64::MIN_POSITIVE)) {
            return None;
        }
        m.column_mut(j).unscale_mut(norm);
    }
    Some(m)
}

fn normal_matrix(n: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

/// Gram-Schmidt basis of an `n×n` standard-normal matrix.
pub fn random_orthonormal_basis(n: usize, seed: u64) -> OrthoBasis {
    random_orthonormal_basis_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_orthonormal_basis_with(n: usize, rng: &mut impl Rng) -> OrthoBasis {
    loop {
        if let Some(columns) = gram_schmidt(normal_matrix(n, 1.0, rng)) {
            return OrthoBasis { columns };
        }
    }
}

/// `X = Σ_j λ_j u_j u_jᵀ` with `λ_j ~ U(η_j − ε, η_j + ε)` and
/// `u = GS(v + N(0, ν²))` applied to the whole perturbed basis.
pub fn sample_instance(
    profile: &EigenProfile,
    basis: &OrthoBasis,
    epsilon: f64,
    nu: f64,
    rng: &mut impl Rng,
) -> Result<SpdMatrix> {
    let n = profile.values.len();
    if basis.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.dim(),
        });
    }
    if !(epsilon >= 0.0) || !(nu >= 0.0) {
        return Err(Error::Config(format!(
            "noise levels must be nonnegative, got epsilon {epsilon}, nu {nu}"
        )));
    }
    if !(epsilon < profile.min()) {
        return Err(Error::Config(format!(
            "epsilon {epsilon} must be below the smallest profile eigenvalue {}",
            profile.min()
        )));
    }
    let lambdas = DVector::from_iterator(
        n,
        profile.values.iter().map(|&eta| {
            if epsilon > 0.0 {
                rng.random_range(eta - epsilon..eta + epsilon)
            } else {
                eta
            }
        }),
    );
    let vectors = loop {
        let perturbed = if nu > 0.0 {
            basis.columns() + normal_matrix(n, nu, rng)
        } else {
            basis.columns().clone()
        };
        if let Some(q) = gram_schmidt(perturbed) {
            break q;
        }
    };
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= lambdas[j];
    }
    SpdMatrix::new(scaled * vectors.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    SynI,
    SynII,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::SynI => "syn1",
            SynthKind::SynII => "syn2",
        }
    }
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "syn1" | "syni" => Ok(SynthKind::SynI),
            "syn2" | "synii" => Ok(SynthKind::SynII),
            other => Err(Error::Config(format!("unknown synthetic dataset '{other}'"))),
        }
    }
}

/// Recipe for a synthetic dataset; `classes[k] = (profile_id, basis_id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub dim: usize,
    pub classes: Vec<(u8, u8)>,
    pub epsilon: f64,
    pub nu: f64,
    pub instances_per_class: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, seed: u64) -> Self {
        let classes = match kind {
            SynthKind::SynI => vec![(1, 1), (1, 2), (2, 1), (2, 2)],
            SynthKind::SynII => vec![(1, 1), (2, 1), (3, 1), (4, 1)],
        };
        Self {
            kind,
            dim: 10,
            classes,
            epsilon: 0.1,
            nu: 0.3,
            instances_per_class: 250,
            seed,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}

/// Independently generated train, validation and test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSplits {
    pub train: LabeledDataset,
    pub validation: LabeledDataset,
    pub test: LabeledDataset,
}

/// Generates all three splits.
///
/// Randomness comes from ChaCha8 seeded with `spec.seed`, one stream per
/// use: basis `b` draws from stream `2^56 + b`, and instance `i` of class `k`
/// in split `s` (0 train, 1 validation, 2 test) from stream
/// `2^57 + s·2^40 + k·2^24 + i`. Any single instance can therefore be
/// regenerated in isolation.
pub fn gen_dataset(spec: &SynthSpec) -> Result<SynthSplits> {
    if spec.classes.is_empty() || spec.instances_per_class == 0 {
        return Err(Error::Config("synthetic spec needs classes and instances".into()));
    }
    if spec.instances_per_class >= 1 << 24 || spec.classes.len() >= 1 << 16 {
        return Err(Error::Config("synthetic spec too large for the stream layout".into()));
    }
    let n = spec.dim;
    let max_basis = spec.classes.iter().map(|c| c.1).max().unwrap_or(0);
    if spec.classes.iter().any(|c| c.1 == 0) {
        return Err(Error::Config("basis ids start at 1".into()));
    }
    let bases: Vec<OrthoBasis> = (1..=max_basis as u64)
        .map(|b| random_orthonormal_basis_with(n, &mut spec.stream(BASIS_STREAM_TAG | b)))
        .collect();
    let profiles = spec
        .classes
        .iter()
        .map(|&(p, _)| eigen_profile(p, n))
        .collect::<Result<Vec<_>>>()?;

    let split = |s: u64| -> Result<LabeledDataset> {
        let mut samples = Vec::with_capacity(spec.instances_per_class * spec.classes.len());
        for (k, &(_, b)) in spec.classes.iter().enumerate() {
            for i in 0..spec.instances_per_class {
                let id = INSTANCE_STREAM_TAG | (s << 40) | ((k as u64) << 24) | i as u64;
                let x = sample_instance(
                    &profiles[k],
                    &bases[b as usize - 1],
                    spec.epsilon,
                    spec.nu,
                    &mut spec.stream(id),
                )?;
                samples.push((x, ClassId::from_index(k)));
            }
        }
        LabeledDataset::new(n, spec.classes.len(), samples)
    };
    Ok(SynthSplits {
        train: split(0)?,
        validation: split(1)?,
        test: split(2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_one_first_value() {
        let p = eigen_profile(1, 10).unwrap();
        // raw 12, 11, ..., 3 sums to 75
        assert!((p.values[0] - 1.6).abs() < 1e-14);
        assert!((p.values[9] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn profiles_have_unit_mean() {
        for id in 1..=4 {
            let p = eigen_profile(id, 10).unwrap();
            let mean = p.values.iter().sum::<f64>() / 10.0;
            assert!((mean - 1.0).abs() < 1e-12, "profile {id}: {mean}");
            assert!(p.values.iter().all(|v| *v > 0.0));
        }
        assert!(eigen_profile(5, 10).is_err());
        assert!(eigen_profile(1, 0).is_err());
    }

    #[test]
    fn reciprocal_profile_ratio() {
        let p = eigen_profile(4, 10).unwrap();
        assert!((p.values[0] / p.values[9] - 10.0).abs() < 1e-12);
        // min ≈ 0.34 leaves room for epsilon = 0.1
        assert!((p.min() - 10.0 * 0.1 / 2.928_968_253_968_254).abs() < 1e-12);
        assert!(p.min() > 0.1);
    }

    #[test]
    fn basis_is_orthonormal_and_deterministic() {
        let b = random_orthonormal_basis(10, 42);
        let utu = b.columns().transpose() * b.columns();
        assert!((utu - DMatrix::<f64>::identity(10, 10)).amax() < 1e-10);
        assert_eq!(b, random_orthonormal_basis(10, 42));
        let other = random_orthonormal_basis(10, 43);
        assert!((b.columns() - other.columns()).norm() > 0.0);
    }

    #[test]
    fn gram_schmidt_flags_dependence() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]);
        assert!(gram_schmidt(m).is_none());
    }

    #[test]
    fn noiseless_instance_is_diagonal_profile() {
        let p = eigen_profile(2, 5).unwrap();
        let x = sample_instance(&p, &OrthoBasis::standard(5), 0.0, 0.0, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(p.values.clone()));
        assert_eq!(x.matrix(), &expected);
    }

    #[test]
    fn epsilon_above_profile_minimum_is_rejected() {
        let p = eigen_profile(2, 10).unwrap();
        let b = OrthoBasis::standard(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_instance(&p, &b, 0.2, 0.3, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn split_sizes_and_balance() {
        let mut spec = SynthSpec::new(SynthKind::SynI, 5);
        spec.instances_per_class = 20;
        let d = gen_dataset(&spec).unwrap();
        for split in [&d.train, &d.validation, &d.test] {
            assert_eq!(split.len(), 80);
            assert_eq!(split.class_counts(), vec![20; 4]);
            assert_eq!(split.dim(), 10);
        }
        assert_ne!(d.train.samples()[0].0, d.test.samples()[0].0);
    }
}
