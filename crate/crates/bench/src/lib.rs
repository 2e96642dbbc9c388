//! Shared fixtures for the benchmarks.

use sbc_core::cascade::{order_classes, train_cascade, CascadeConfig, SbcModel};
use sbc_core::dataset::{class_frequencies, Dataset, SampleWeights};
use sbc_core::gbt::{GbtModel, GbtParams};
use sbc_core::synthetic::{make_blobs, BlobSpec};

/// Five imbalanced classes in eight dimensions.
pub fn imbalanced(scale: usize, draw: u64) -> Dataset {
    let sizes: Vec<usize> = [1000, 100, 20, 10, 4].iter().map(|n| n * scale).collect();
    make_blobs(&BlobSpec::new(&sizes, 8, 5.0, 2.0, 1), draw).expect("valid blob spec")
}

pub fn params(num_rounds: usize, max_depth: usize) -> GbtParams {
    GbtParams {
        num_rounds,
        max_depth,
        ..GbtParams::default()
    }
}

pub fn cascade(train: &Dataset, p: &GbtParams) -> SbcModel {
    let o = order_classes(&class_frequencies(train)).expect("at least two classes");
    train_cascade(train, &o, &[*p], &CascadeConfig::default()).expect("cascade trains")
}

pub fn multiclass(train: &Dataset, p: &GbtParams) -> GbtModel {
    GbtModel::train_multiclass(
        train.features(),
        train.labels(),
        train.n_classes(),
        &SampleWeights::uniform(train.n_rows()),
        p,
    )
    .expect("model trains")
}
