use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plrsq_bench::{dataset, warm_model};
use plrsq_core::spd::{exp_map, geo_distance, log_map, sym_eig};

fn geometry(c: &mut Criterion) {
    let mut group = c.benchmark_group("geometry");
    for n in [3, 5, 10] {
        let data = dataset(n, 2, 7);
        let (x, y) = (&data.samples()[0].0, &data.samples()[1].0);
        group.bench_with_input(BenchmarkId::new("sym_eig", n), x, |b, x| {
            b.iter(|| sym_eig(black_box(x.matrix())).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("geo_distance", n), &(x, y), |b, (x, y)| {
            b.iter(|| geo_distance(black_box(x), black_box(y)).unwrap())
        });
        let v = log_map(x, y).unwrap();
        group.bench_with_input(BenchmarkId::new("exp_log_round_trip", n), &(x, v), |b, (x, v)| {
            b.iter(|| log_map(x, &exp_map(black_box(x), black_box(v)).unwrap()).unwrap())
        });
    }
    group.finish();
}

fn sgd_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("sgd_step");
    for xi in [1, 3] {
        let data = dataset(10, 10, 3);
        let model = warm_model(&data, xi);
        let (x, y) = data.samples()[5].clone();
        group.bench_function(BenchmarkId::new("n10_prototypes_per_class", xi), |b| {
            b.iter_batched_ref(
                || model.clone(),
                |m| m.sgd_step(black_box(&x), y, 0.01).unwrap(),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, geometry, sgd_step);
criterion_main!(benches);
