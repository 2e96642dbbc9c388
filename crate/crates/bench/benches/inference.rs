use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sbc_bench::{cascade, imbalanced, multiclass, params};
use sbc_core::cascade::UnknownAction;
use sbc_core::metrics::{confusion, per_class_report};

fn predict(c: &mut Criterion) {
    let train = imbalanced(2, 0);
    let test = imbalanced(2, 1);
    let p = params(30, 4);
    let sbc = cascade(&train, &p);
    let mcc = multiclass(&train, &p);

    // Most rows are majority rows, which a cascade settles at its first stage.
    let mut group = c.benchmark_group("predict");
    group.bench_function("cascade", |b| {
        b.iter(|| sbc.predict_batch(black_box(test.features()), UnknownAction::AssignLastClass).unwrap())
    });
    group.bench_function("softmax", |b| b.iter(|| mcc.predict_class(black_box(test.features()), 0.5).unwrap()));
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let n = 100_000;
    let truth: Vec<usize> = (0..n).map(|i| (i * 7) % 5).collect();
    let pred: Vec<usize> = (0..n).map(|i| (i * 11) % 5).collect();
    c.bench_function("confusion_and_report", |b| {
        b.iter(|| per_class_report(&confusion(black_box(&truth), black_box(&pred), 5).unwrap()))
    });
}

criterion_group!(benches, predict, metrics);
criterion_main!(benches);
