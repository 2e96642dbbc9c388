//! Cascaded binary gradient-boosted classifiers for imbalanced multi-class
//! data, with the supporting data preparation, hyperparameter search and
//! evaluation code.

pub mod bundle;
pub mod cascade;
pub mod dataset;
pub mod error;
pub mod gbt;
pub mod hpo;
pub mod matrix;
pub mod metrics;
pub mod synthetic;

pub use bundle::{BundledModel, Fingerprint, ModelBundle};
pub use cascade::{
    order_classes, train_cascade, CascadeConfig, ClassOrdering, LastStagePolicy, NegativeSource, Outcome,
    Prediction, SbcModel, StageWeighting, UnknownAction,
};
pub use dataset::{
    clean, load_csv, stratified_split, CleaningPolicy, CleaningReport, CsvOptions, Dataset, SampleWeights,
    SplitSpec, WeightScheme,
};
pub use error::{Error, Result};
pub use gbt::{GbtModel, GbtParams, Objective};
pub use hpo::{CvConfig, HalvingConfig, HpGrid, HpoResult, Metric, Search};
pub use matrix::Matrix;
pub use metrics::{ConfusionMatrix, EvalSummary, Timings};
