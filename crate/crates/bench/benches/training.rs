use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sbc_bench::{cascade, imbalanced, multiclass, params};
use sbc_core::dataset::SampleWeights;
use sbc_core::gbt::GbtModel;

fn binary(c: &mut Criterion) {
    let mut group = c.benchmark_group("binary_train");
    group.sample_size(10);
    for scale in [1, 4] {
        let d = imbalanced(scale, 0);
        let y: Vec<usize> = d.labels().iter().map(|&l| usize::from(l == 0)).collect();
        let w = SampleWeights::uniform(d.n_rows());
        let p = params(20, 4);
        group.bench_with_input(BenchmarkId::from_parameter(d.n_rows()), &d, |b, d| {
            b.iter(|| GbtModel::train_binary(black_box(d.features()), &y, &w, &p).unwrap())
        });
    }
    group.finish();
}

fn cascade_vs_softmax(c: &mut Criterion) {
    let d = imbalanced(2, 0);
    let p = params(20, 4);
    let mut group = c.benchmark_group("train_methods");
    group.sample_size(10);
    group.bench_function("cascade", |b| b.iter(|| cascade(black_box(&d), &p)));
    group.bench_function("softmax", |b| b.iter(|| multiclass(black_box(&d), &p)));
    group.finish();
}

criterion_group!(benches, binary, cascade_vs_softmax);
criterion_main!(benches);
