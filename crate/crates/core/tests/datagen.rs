mod common;

use common::{oracle_distance, rel_err, rng, satisfies_spd_invariants};
use nalgebra::DMatrix;
use plrsq_core::datagen::{
    covariance_from_trial, eigen_profile, gen_dataset, random_orthonormal_basis, sample_instance,
    OrthoBasis, SynthKind, SynthSpec,
};
use plrsq_core::ErrorCategory;
use proptest::prelude::*;

fn small(kind: SynthKind, seed: u64) -> SynthSpec {
    SynthSpec { instances_per_class: 20, ..SynthSpec::new(kind, seed) }
}

#[test]
fn profiles_have_unit_mean() {
    for id in 1..=4 {
        let p = eigen_profile(id, 10).unwrap();
        let mean = p.values.iter().sum::<f64>() / 10.0;
        assert!((mean - 1.0).abs() < 1e-14);
        assert!(p.min() > 0.1 - 1e-9, "profile {id} min {}", p.min());
    }
    let p1 = eigen_profile(1, 10).unwrap();
    assert!((p1.values[0] / p1.values[9] - 12.0 / 3.0).abs() < 1e-12);
    assert!(eigen_profile(5, 10).is_err());
    assert!(eigen_profile(1, 13).is_err());
}

#[test]
fn noiseless_instance_reconstructs_profile() {
    let p = eigen_profile(2, 10).unwrap();
    let x = sample_instance(&p, &OrthoBasis::standard(10), 0.0, 0.0, &mut rng(0)).unwrap();
    let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p.values.clone()));
    assert!(rel_err(x.matrix(), &expected) < 1e-14);
    let err = sample_instance(&p, &OrthoBasis::standard(10), 1.0, 0.0, &mut rng(0)).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Config);
}

#[test]
fn bases_are_orthonormal() {
    for seed in 0..20 {
        let b = random_orthonormal_basis(10, seed);
        let q = b.columns();
        assert!((q.transpose() * q - DMatrix::<f64>::identity(10, 10)).amax() < 1e-12);
    }
}

#[test]
fn splits_are_valid_and_balanced() {
    for kind in [SynthKind::SynI, SynthKind::SynII] {
        let g = gen_dataset(&small(kind, 5)).unwrap();
        for split in [&g.train, &g.validation, &g.test] {
            assert_eq!(split.dim(), 10);
            assert_eq!(split.class_counts(), vec![20; 4]);
            for (x, _) in split.iter() {
                satisfies_spd_invariants(x).unwrap();
            }
        }
        assert_ne!(g.train, g.test);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn regeneration_is_bit_identical(seed in any::<u64>()) {
        let spec = SynthSpec { instances_per_class: 5, ..SynthSpec::new(SynthKind::SynII, seed) };
        let a = gen_dataset(&spec).unwrap();
        let b = gen_dataset(&spec).unwrap();
        prop_assert_eq!(&a, &b);
        // growing a split leaves the existing instances unchanged
        let bigger = gen_dataset(&SynthSpec { instances_per_class: 6, ..spec }).unwrap();
        prop_assert_eq!(&bigger.train.samples()[..5], &a.train.samples()[..5]);
    }
}

#[test]
fn syn1_classes_are_tighter_than_their_separation() {
    let g = gen_dataset(&small(SynthKind::SynI, 9)).unwrap();
    let by_class = g.train.by_class();
    let mut intra = (0.0, 0);
    let mut inter = (0.0, 0);
    for (a, ca) in by_class.iter().enumerate() {
        for (b, cb) in by_class.iter().enumerate() {
            for (i, x) in ca.iter().enumerate() {
                for (j, y) in cb.iter().enumerate() {
                    if a == b && i >= j {
                        continue;
                    }
                    let d = oracle_distance(x, y);
                    let acc = if a == b { &mut intra } else { &mut inter };
                    acc.0 += d;
                    acc.1 += 1;
                }
            }
        }
    }
    let (intra, inter) = (intra.0 / intra.1 as f64, inter.0 / inter.1 as f64);
    assert!(intra < inter, "intra {intra} vs inter {inter}");
}

#[test]
fn covariance_matches_definition() {
    let mut r = rng(4);
    let trial = common::gaussian(4, 50, &mut r);
    let c = covariance_from_trial(&trial).unwrap();
    let mut expected = DMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            let (mi, mj) = (trial.row(i).mean(), trial.row(j).mean());
            let s: f64 = (0..50).map(|t| (trial[(i, t)] - mi) * (trial[(j, t)] - mj)).sum();
            expected[(i, j)] = s / 49.0;
        }
    }
    assert!(rel_err(c.matrix(), &expected) < 1e-12);

    let short = common::gaussian(4, 3, &mut r);
    assert!(matches!(covariance_from_trial(&short), Err(plrsq_core::Error::Domain(_))));
}
