//! Self-describing model files: the trained model plus the feature schema,
//! class names, and a fingerprint of the training data.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::{Outcome, Prediction, SbcModel, UnknownAction};
use crate::dataset::{class_frequencies, Dataset};
use crate::error::{Error, Result};
use crate::gbt::{argmax, GbtModel};
use crate::matrix::Matrix;

const FORMAT: &str = "sbc-bundle";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "model")]
pub enum BundledModel {
    /// A single multi-class model.
    Mcc(GbtModel),
    Sbc(SbcModel),
}

impl BundledModel {
    pub fn n_features(&self) -> usize {
        match self {
            BundledModel::Mcc(m) => m.n_features(),
            BundledModel::Sbc(m) => m.n_features(),
        }
    }

    /// Predictions with their stage traces; multi-class predictions have an
    /// empty trace.
    pub fn predict(&self, x: &Matrix, action: UnknownAction) -> Result<Vec<Prediction>> {
        match self {
            BundledModel::Sbc(m) => m.predict_batch(x, action),
            BundledModel::Mcc(m) => {
                if x.n_cols() != m.n_features() {
                    return Err(Error::DimensionMismatch {
                        expected: m.n_features(),
                        actual: x.n_cols(),
                    });
                }
                x.rows()
                    .map(|row| {
                        Ok(Prediction {
                            outcome: Outcome::Known(argmax(&m.predict_proba_row(row)?)),
                            trace: Vec::new(),
                        })
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub rows: usize,
    pub n_features: usize,
    /// Row count per class name.
    pub class_counts: BTreeMap<String, usize>,
    /// SHA-256 over names, feature bits and labels, hex encoded.
    pub content_hash: String,
}

impl Fingerprint {
    pub fn of(d: &Dataset) -> Self {
        let mut h = Sha256::new();
        for name in d.feature_names() {
            h.update(name.as_bytes());
            h.update([0]);
        }
        h.update(d.label_name().as_bytes());
        h.update([0]);
        for name in d.class_names() {
            h.update(name.as_bytes());
            h.update([0]);
        }
        for v in d.features().as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        for &l in d.labels() {
            h.update((l as u64).to_le_bytes());
        }
        Fingerprint {
            rows: d.n_rows(),
            n_features: d.n_features(),
            class_counts: class_frequencies(d)
                .into_iter()
                .map(|(c, n)| (d.class_names()[c].clone(), n))
                .collect(),
            content_hash: hex::encode(h.finalize()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    format: String,
    version: u32,
    pub model: BundledModel,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub label_column: String,
    /// The run configuration that produced the model.
    pub config: serde_json::Value,
    pub fingerprint: Fingerprint,
}

impl ModelBundle {
    pub fn new(model: BundledModel, train: &Dataset, config: serde_json::Value) -> Result<Self> {
        if model.n_features() != train.n_features() {
            return Err(Error::DimensionMismatch {
                expected: train.n_features(),
                actual: model.n_features(),
            });
        }
        Ok(ModelBundle {
            format: FORMAT.to_string(),
            version: FORMAT_VERSION,
            model,
            class_names: train.class_names().to_vec(),
            feature_names: train.feature_names().to_vec(),
            label_column: train.label_name().to_string(),
            config,
            fingerprint: Fingerprint::of(train),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: ModelBundle = serde_json::from_str(text)?;
        b.check_header()?;
        Ok(b)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let b: ModelBundle = serde_json::from_reader(BufReader::new(file))?;
        b.check_header()?;
        Ok(b)
    }

    fn check_header(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Format(format!("unexpected format `{}`", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        if self.feature_names.len() != self.model.n_features() {
            return Err(Error::Format("feature names do not match the model".to_string()));
        }
        Ok(())
    }

    /// Checks `d` against the training schema and re-encodes its labels to
    /// the training class ids.
    pub fn conform(&self, d: &Dataset) -> Result<Dataset> {
        if d.feature_names() != self.feature_names.as_slice() {
            return Err(Error::FingerprintMismatch(format!(
                "expected features [{}], found [{}]",
                self.feature_names.join(", "),
                d.feature_names().join(", ")
            )));
        }
        d.reencode_classes(&self.class_names)
    }

    /// Checks only the feature columns; for unlabeled inputs.
    pub fn check_features(&self, names: &[String]) -> Result<()> {
        if names != self.feature_names.as_slice() {
            return Err(Error::FingerprintMismatch(format!(
                "expected features [{}], found [{}]",
                self.feature_names.join(", "),
                names.join(", ")
            )));
        }
        Ok(())
    }

    pub fn predict(&self, x: &Matrix, action: UnknownAction) -> Result<Vec<Prediction>> {
        self.model.predict(x, action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{order_classes, train_cascade, CascadeConfig};
    use crate::gbt::GbtParams;

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 3) as f64 + 0.1 * (i as f64 / 60.0), i as f64]).collect();
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            vec!["a".into(), "b".into(), "c".into()],
            vec!["f0".into(), "f1".into()],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_and_schema() {
        let d = data();
        let o = order_classes(&class_frequencies(&d)).unwrap();
        let p = GbtParams {
            num_rounds: 5,
            ..GbtParams::default()
        };
        let m = train_cascade(&d, &o, &[p], &CascadeConfig::default()).unwrap();
        let b = ModelBundle::new(BundledModel::Sbc(m), &d, serde_json::json!({"seed": 1})).unwrap();
        let back = ModelBundle::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.fingerprint, Fingerprint::of(&d));

        let renamed = Dataset::new(
            d.features().clone(),
            d.labels().to_vec(),
            d.class_names().to_vec(),
            vec!["f0".into(), "other".into()],
        )
        .unwrap();
        assert!(matches!(b.conform(&renamed), Err(Error::FingerprintMismatch(_))));
        assert!(b.conform(&d).is_ok());

        let text = b.to_json().unwrap().replace("sbc-bundle", "other");
        assert!(matches!(ModelBundle::from_json(&text), Err(Error::Format(_))));
    }
}
