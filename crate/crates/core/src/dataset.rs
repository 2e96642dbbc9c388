//! Labeled tabular data: CSV loading, cleaning, stratified splitting and
//! class-frequency sample weights.
//!
//! Labels are encoded by first appearance in the source file. Frequency
//! ranking for the cascade lives in [`crate::cascade::ClassOrdering`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    label_name: String,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.n_rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.n_rows(),
                actual: labels.len(),
            });
        }
        if features.n_cols() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: features.n_cols(),
                actual: feature_names.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                n: class_names.len(),
            });
        }
        Ok(Self {
            features,
            labels,
            class_names,
            feature_names,
            label_name: "label".to_string(),
        })
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = name.into();
        self
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// True when no feature cell is NaN or infinite.
    pub fn is_clean(&self) -> bool {
        self.features.as_slice().iter().all(|v| v.is_finite())
    }

    /// Rows at `indices`, in that order. Class and feature names are kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// Re-encodes labels against another class-name list, e.g. the classes a
    /// model was trained on. Fails on a class name absent from `names`.
    pub fn reencode_classes(&self, names: &[String]) -> Result<Dataset> {
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut mapping = Vec::with_capacity(self.class_names.len());
        for name in &self.class_names {
            match index.get(name.as_str()) {
                Some(&i) => mapping.push(i),
                None => {
                    return Err(Error::FingerprintMismatch(format!(
                        "class `{name}` is not known to the model"
                    )))
                }
            }
        }
        Ok(Dataset {
            features: self.features.clone(),
            labels: self.labels.iter().map(|&l| mapping[l]).collect(),
            class_names: names.to_vec(),
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
        })
    }

    /// Writes the dataset as CSV: a header of feature names followed by the
    /// label column, labels written as class names. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(std::io::BufWriter::new(file))
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.label_name);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.n_features() + 1);
        for (row, &label) in self.features.rows().zip(&self.labels) {
            record.clear();
            record.extend(row.iter().map(|v| v.to_string()));
            record.push(self.class_names[label].clone());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub label_column: String,
    pub header: bool,
    /// Cells equal to one of these (after trimming) load as missing.
    pub missing_tokens: Vec<String>,
    /// Columns ignored entirely, e.g. row ids.
    pub drop_columns: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: "label".to_string(),
            header: true,
            missing_tokens: vec![String::new(), "NaN".to_string()],
            drop_columns: Vec::new(),
        }
    }
}

impl CsvOptions {
    pub fn with_label(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            ..Self::default()
        }
    }
}

/// Loads a CSV file. Without a header, columns are named `col0`, `col1`, …
/// and `label_column` may also be given as a bare column index.
///
/// Missing cells load as NaN markers for [`clean`].
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), opts)
}

pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let mut first: Option<csv::StringRecord> = None;
    let columns: Vec<String> = if opts.header {
        match records.next() {
            Some(rec) => rec?.iter().map(|s| s.trim().to_string()).collect(),
            None => return Err(Error::EmptyDataset),
        }
    } else {
        match records.next() {
            Some(rec) => {
                let rec = rec?;
                let names = (0..rec.len()).map(|i| format!("col{i}")).collect();
                first = Some(rec);
                names
            }
            None => return Err(Error::EmptyDataset),
        }
    };

    let label_idx = columns
        .iter()
        .position(|c| c == opts.label_column.trim())
        .or_else(|| {
            if opts.header {
                None
            } else {
                opts.label_column.trim().parse::<usize>().ok().filter(|&i| i < columns.len())
            }
        })
        .ok_or_else(|| Error::MissingLabelColumn(opts.label_column.clone()))?;

    let dropped: HashSet<&str> = opts.drop_columns.iter().map(|s| s.trim()).collect();
    let feature_cols: Vec<usize> = (0..columns.len())
        .filter(|&i| i != label_idx && !dropped.contains(columns[i].as_str()))
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&i| columns[i].clone()).collect();
    let missing: HashSet<&str> = opts.missing_tokens.iter().map(|s| s.trim()).collect();

    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut labels = Vec::new();
    let mut data = Vec::new();

    let mut parse_record = |row: usize, rec: &csv::StringRecord| -> Result<()> {
        if rec.len() != columns.len() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        let label = rec[label_idx].trim();
        if label.is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "empty label".to_string(),
            });
        }
        for &c in &feature_cols {
            let cell = rec[c].trim();
            let value = if missing.contains(cell) {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| Error::MalformedRow {
                    row,
                    reason: format!("column `{}`: cannot parse `{cell}` as a number", columns[c]),
                })?
            };
            data.push(value);
        }
        let id = match class_index.get(label) {
            Some(&id) => id,
            None => {
                let id = class_names.len();
                class_names.push(label.to_string());
                class_index.insert(label.to_string(), id);
                id
            }
        };
        labels.push(id);
        Ok(())
    };

    let mut row = 0;
    if let Some(rec) = first {
        parse_record(row, &rec)?;
        row += 1;
    }
    for rec in records {
        parse_record(row, &rec?)?;
        row += 1;
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = Matrix::new(labels.len(), feature_names.len(), data)?;
    Ok(Dataset::new(features, labels, class_names, feature_names)?
        .with_label_name(columns[label_idx].clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingAction {
    DropRow,
    ImputeZero,
    ImputeMedian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfinityAction {
    DropRow,
    /// +inf becomes the column's largest finite value, -inf the smallest.
    ClampToFiniteMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeAction {
    Keep,
    DropRow,
    ClampZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningPolicy {
    pub drop_duplicates: bool,
    pub missing_value_action: MissingAction,
    pub infinity_action: InfinityAction,
    pub negative_action: NegativeAction,
    /// Feature names the negative action applies to; `None` means all.
    pub negative_columns: Option<Vec<String>>,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        Self {
            drop_duplicates: true,
            missing_value_action: MissingAction::DropRow,
            infinity_action: InfinityAction::DropRow,
            negative_action: NegativeAction::DropRow,
            negative_columns: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub duplicates_dropped: usize,
    pub missing_rows_dropped: usize,
    pub missing_cells_imputed: usize,
    pub infinite_rows_dropped: usize,
    pub infinite_cells_clamped: usize,
    pub negative_rows_dropped: usize,
    pub negative_cells_clamped: usize,
}

impl CleaningReport {
    /// `key: count` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("rows_in", self.rows_in),
            ("rows_out", self.rows_out),
            ("duplicates_dropped", self.duplicates_dropped),
            ("missing_rows_dropped", self.missing_rows_dropped),
            ("missing_cells_imputed", self.missing_cells_imputed),
            ("infinite_rows_dropped", self.infinite_rows_dropped),
            ("infinite_cells_clamped", self.infinite_cells_clamped),
            ("negative_rows_dropped", self.negative_rows_dropped),
            ("negative_cells_clamped", self.negative_cells_clamped),
        ] {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }
}

/// Applies a cleaning policy. Rows are dropped first (missing, then
/// infinite, then negative), column statistics for imputation and clamping
/// are taken over the surviving rows, and duplicates are removed last on the
/// final values. Survivors keep their original order.
pub fn clean(d: &Dataset, p: &CleaningPolicy) -> Result<(Dataset, CleaningReport)> {
    let n_cols = d.n_features();
    let negative_cols: Vec<bool> = match &p.negative_columns {
        None => vec![true; n_cols],
        Some(names) => {
            let set: HashSet<&str> = names.iter().map(String::as_str).collect();
            d.feature_names.iter().map(|n| set.contains(n.as_str())).collect()
        }
    };
    let mut report = CleaningReport {
        rows_in: d.n_rows(),
        ..CleaningReport::default()
    };

    let mut keep = Vec::with_capacity(d.n_rows());
    for (i, row) in d.features.rows().enumerate() {
        if p.missing_value_action == MissingAction::DropRow && row.iter().any(|v| v.is_nan()) {
            report.missing_rows_dropped += 1;
            continue;
        }
        if p.infinity_action == InfinityAction::DropRow && row.iter().any(|v| v.is_infinite()) {
            report.infinite_rows_dropped += 1;
            continue;
        }
        if p.negative_action == NegativeAction::DropRow
            && row
                .iter()
                .zip(&negative_cols)
                .any(|(v, &applies)| applies && *v < 0.0)
        {
            report.negative_rows_dropped += 1;
            continue;
        }
        keep.push(i);
    }
    if keep.is_empty() {
        return Err(Error::AllRowsDropped);
    }
    let mut out = d.subset(&keep);

    // Column statistics over finite surviving values.
    let mut finite_min = vec![f64::INFINITY; n_cols];
    let mut finite_max = vec![f64::NEG_INFINITY; n_cols];
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n_cols];
    for row in out.features.rows() {
        for (j, &v) in row.iter().enumerate() {
            if v.is_finite() {
                finite_min[j] = finite_min[j].min(v);
                finite_max[j] = finite_max[j].max(v);
                if p.missing_value_action == MissingAction::ImputeMedian {
                    columns[j].push(v);
                }
            }
        }
    }
    let medians: Vec<f64> = columns
        .iter_mut()
        .map(|c| {
            if c.is_empty() {
                return 0.0;
            }
            c.sort_by(f64::total_cmp);
            let m = c.len() / 2;
            if c.len() % 2 == 1 {
                c[m]
            } else {
                c[m - 1] / 2.0 + c[m] / 2.0
            }
        })
        .collect();

    for i in 0..out.n_rows() {
        let row = out.features.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            if v.is_nan() {
                *v = match p.missing_value_action {
                    MissingAction::ImputeMedian => medians[j],
                    _ => 0.0,
                };
                report.missing_cells_imputed += 1;
            } else if v.is_infinite() {
                let (lo, hi) = (finite_min[j], finite_max[j]);
                *v = if *v > 0.0 {
                    if hi.is_finite() { hi } else { 0.0 }
                } else if lo.is_finite() {
                    lo
                } else {
                    0.0
                };
                report.infinite_cells_clamped += 1;
            }
            if negative_cols[j] && p.negative_action == NegativeAction::ClampZero && *v < 0.0 {
                *v = 0.0;
                report.negative_cells_clamped += 1;
            }
        }
    }

    if p.drop_duplicates {
        let mut seen: HashSet<(Vec<u64>, usize)> = HashSet::with_capacity(out.n_rows());
        let mut unique = Vec::with_capacity(out.n_rows());
        for (i, row) in out.features.rows().enumerate() {
            // -0.0 and 0.0 compare equal as values, so normalize before hashing.
            let key: Vec<u64> = row.iter().map(|&v| (v + 0.0).to_bits()).collect();
            if seen.insert((key, out.labels[i])) {
                unique.push(i);
            } else {
                report.duplicates_dropped += 1;
            }
        }
        if unique.len() != out.n_rows() {
            out = out.subset(&unique);
        }
    }

    report.rows_out = out.n_rows();
    Ok((out, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.1,
            seed: 42,
            stratified: true,
        }
    }
}

/// Number of test rows for a group of `count` rows: round half up, clamped
/// so at least one row stays in training.
pub fn test_count(count: usize, test_fraction: f64) -> usize {
    if count == 0 {
        return 0;
    }
    let raw = (count as f64 * test_fraction + 0.5).floor() as usize;
    raw.min(count - 1)
}

/// Splits into (train, test). With `stratified`, each class is shuffled and
/// split on its own; otherwise the whole dataset is. Both halves preserve
/// the input row order.
pub fn stratified_split(d: &Dataset, s: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(s.test_fraction > 0.0 && s.test_fraction < 1.0) {
        return Err(Error::InvalidFraction(s.test_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut is_test = vec![false; d.n_rows()];

    let groups: Vec<Vec<usize>> = if s.stratified {
        let mut by_class = vec![Vec::new(); d.n_classes()];
        for (i, &l) in d.labels.iter().enumerate() {
            by_class[l].push(i);
        }
        by_class
    } else {
        vec![(0..d.n_rows()).collect()]
    };

    for (g, mut rows) in groups.into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if s.stratified && rows.len() == 1 {
            log::warn!(
                "class `{}` has a single row; it goes to the training split",
                d.class_names[g]
            );
        }
        let n_test = test_count(rows.len(), s.test_fraction);
        rows.shuffle(&mut rng);
        for &i in &rows[..n_test] {
            is_test[i] = true;
        }
    }

    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
        (0..d.n_rows()).partition(|&i| is_test[i]);
    Ok((d.subset(&train_idx), d.subset(&test_idx)))
}

/// Row count per class id, for classes that occur.
pub fn class_frequencies(d: &Dataset) -> BTreeMap<usize, usize> {
    label_counts(&d.labels)
}

pub fn label_counts(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    #[default]
    None,
    InverseFrequency,
}

/// Per-row positive training weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights(Vec<f64>);

impl SampleWeights {
    pub fn uniform(n: usize) -> Self {
        SampleWeights(vec![1.0; n])
    }

    pub fn from_vec(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParams(
                "sample weights must be finite and positive".to_string(),
            ));
        }
        Ok(SampleWeights(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> SampleWeights {
        SampleWeights(indices.iter().map(|&i| self.0[i]).collect())
    }
}

/// `InverseFrequency` gives class `c` the weight `N / (K * n_c)`, where `K`
/// counts the classes present, so a balanced label set gets all ones.
pub fn compute_sample_weights(labels: &[usize], scheme: WeightScheme) -> SampleWeights {
    match scheme {
        WeightScheme::None => SampleWeights::uniform(labels.len()),
        WeightScheme::InverseFrequency => {
            let counts = label_counts(labels);
            let n = labels.len() as f64;
            let k = counts.len() as f64;
            let per_class: HashMap<usize, f64> = counts
                .iter()
                .map(|(&c, &nc)| (c, n / (k * nc as f64)))
                .collect();
            SampleWeights(labels.iter().map(|l| per_class[l]).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(rows: &[[f64; 2]], labels: &[usize], n_classes: usize) -> Dataset {
        Dataset::new(
            Matrix::from_rows(rows).unwrap(),
            labels.to_vec(),
            (0..n_classes).map(|c| format!("c{c}")).collect(),
            vec!["x".into(), "y".into()],
        )
        .unwrap()
    }

    #[test]
    fn first_appearance_encoding() {
        let csv = "f1,f2,label\n1,2,a\n3,4,a\n5,6,b\n7,8,a\n";
        let d = read_csv(csv.as_bytes(), &CsvOptions::default()).unwrap();
        assert_eq!(d.class_names(), ["a", "b"]);
        assert_eq!(d.labels(), [0, 0, 1, 0]);
        assert_eq!(d.feature_names(), ["f1", "f2"]);
        assert_eq!(d.features().row(2), [5.0, 6.0]);
    }

    #[test]
    fn non_numeric_cell_is_malformed() {
        let csv = "f1,label\n1,a\nfoo,b\n";
        let opts = CsvOptions {
            missing_tokens: vec![],
            ..CsvOptions::default()
        };
        match read_csv(csv.as_bytes(), &opts) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn missing_tokens_load_as_nan() {
        let csv = "f1,f2,label\n,NaN,a\n1,Infinity,b\n";
        let d = read_csv(csv.as_bytes(), &CsvOptions::default()).unwrap();
        assert!(d.features().get(0, 0).is_nan());
        assert!(d.features().get(0, 1).is_nan());
        assert_eq!(d.features().get(1, 1), f64::INFINITY);
        assert!(!d.is_clean());
    }

    #[test]
    fn label_column_errors() {
        let csv = "f1,f2\n1,2\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &CsvOptions::default()),
            Err(Error::MissingLabelColumn(_))
        ));
        assert!(matches!(
            read_csv("f1,label\n".as_bytes(), &CsvOptions::default()),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            read_csv("f1,label\n1,a,3\n".as_bytes(), &CsvOptions::default()),
            Err(Error::MalformedRow { row: 0, .. })
        ));
    }

    #[test]
    fn headerless_and_dropped_columns() {
        let csv = "7,1.5,x\n8,2.5,y\n";
        let opts = CsvOptions {
            label_column: "2".into(),
            header: false,
            drop_columns: vec!["col0".into()],
            ..CsvOptions::default()
        };
        let d = read_csv(csv.as_bytes(), &opts).unwrap();
        assert_eq!(d.feature_names(), ["col1"]);
        assert_eq!(d.features().as_slice(), [1.5, 2.5]);
        assert_eq!(d.class_names(), ["x", "y"]);
    }

    #[test]
    fn export_round_trip_is_bit_exact() {
        let d = toy(
            &[[0.1, -1e-300], [f64::MAX, 1.0 / 3.0], [123456.789, -0.0]],
            &[0, 1, 0],
            2,
        );
        let mut buf = Vec::new();
        d.to_writer(&mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &CsvOptions::default()).unwrap();
        let bits = |d: &Dataset| d.features().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&d), bits(&back));
        assert_eq!(d.labels(), back.labels());
    }

    #[test]
    fn duplicates_dropped() {
        let d = toy(&[[1.0, 2.0], [1.0, 2.0], [3.0, 4.0]], &[0, 0, 1], 2);
        let (out, rep) = clean(&d, &CleaningPolicy::default()).unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!(rep.duplicates_dropped, 1);
        assert_eq!(rep.rows_out, 2);
    }

    #[test]
    fn same_features_different_label_is_not_a_duplicate() {
        let d = toy(&[[1.0, 2.0], [1.0, 2.0]], &[0, 1], 2);
        let (out, _) = clean(&d, &CleaningPolicy::default()).unwrap();
        assert_eq!(out.n_rows(), 2);
    }

    #[test]
    fn infinity_row_dropped() {
        let d = toy(&[[1.0, f64::INFINITY], [3.0, 4.0]], &[0, 1], 2);
        let (out, rep) = clean(&d, &CleaningPolicy::default()).unwrap();
        assert_eq!(out.n_rows(), 1);
        assert_eq!(out.features().row(0), [3.0, 4.0]);
        assert_eq!(rep.infinite_rows_dropped, 1);
    }

    #[test]
    fn clamp_and_impute() {
        let d = toy(
            &[
                [1.0, f64::INFINITY],
                [f64::NAN, 4.0],
                [3.0, -2.0],
                [5.0, f64::NEG_INFINITY],
            ],
            &[0, 1, 0, 1],
            2,
        );
        let p = CleaningPolicy {
            drop_duplicates: false,
            missing_value_action: MissingAction::ImputeMedian,
            infinity_action: InfinityAction::ClampToFiniteMax,
            negative_action: NegativeAction::Keep,
            negative_columns: None,
        };
        let (out, rep) = clean(&d, &p).unwrap();
        assert!(out.is_clean());
        assert_eq!(out.features().get(0, 1), 4.0);
        assert_eq!(out.features().get(3, 1), -2.0);
        assert_eq!(out.features().get(1, 0), 3.0);
        assert_eq!(rep.missing_cells_imputed, 1);
        assert_eq!(rep.infinite_cells_clamped, 2);
    }

    #[test]
    fn negative_policy_respects_column_subset() {
        let d = toy(&[[-1.0, 2.0], [3.0, -4.0], [5.0, 6.0]], &[0, 1, 0], 2);
        let p = CleaningPolicy {
            negative_columns: Some(vec!["y".into()]),
            ..CleaningPolicy::default()
        };
        let (out, rep) = clean(&d, &p).unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!(rep.negative_rows_dropped, 1);

        let p = CleaningPolicy {
            negative_action: NegativeAction::ClampZero,
            ..CleaningPolicy::default()
        };
        let (out, rep) = clean(&d, &p).unwrap();
        assert_eq!(out.features().get(0, 0), 0.0);
        assert_eq!(rep.negative_cells_clamped, 2);
    }

    #[test]
    fn all_rows_dropped_is_an_error() {
        let d = toy(&[[f64::NAN, 1.0]], &[0], 1);
        assert!(matches!(
            clean(&d, &CleaningPolicy::default()),
            Err(Error::AllRowsDropped)
        ));
    }

    #[test]
    fn split_counts() {
        assert_eq!(test_count(10, 0.1), 1);
        assert_eq!(test_count(1, 0.1), 0);
        assert_eq!(test_count(11, 0.1), 1);
        assert_eq!(test_count(5, 0.1), 1); // 0.5 rounds up
        assert_eq!(test_count(2, 0.9), 1);
        // Paper-scale class sizes: Heartbleed 11 → 10/1, UNSW Worms 174 → 157/17.
        assert_eq!(11 - test_count(11, 0.1), 10);
        assert_eq!(test_count(174, 0.1), 17);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let d = toy(&[[1.0, 2.0], [3.0, 4.0]], &[0, 1], 2);
        for f in [0.0, 1.0, -0.5, f64::NAN] {
            let s = SplitSpec {
                test_fraction: f,
                ..SplitSpec::default()
            };
            assert!(matches!(stratified_split(&d, &s), Err(Error::InvalidFraction(_))));
        }
    }

    #[test]
    fn singleton_class_stays_in_train() {
        let rows: Vec<[f64; 2]> = (0..11).map(|i| [i as f64, 0.0]).collect();
        let mut labels = vec![0; 10];
        labels.push(1);
        let d = toy(&rows, &labels, 2);
        let (train, test) = stratified_split(&d, &SplitSpec::default()).unwrap();
        assert_eq!(train.n_rows(), 10);
        assert_eq!(test.n_rows(), 1);
        assert!(train.labels().contains(&1));
    }

    #[test]
    fn weights_formula() {
        let mut labels = vec![0; 90];
        labels.extend(vec![1; 10]);
        let w = compute_sample_weights(&labels, WeightScheme::InverseFrequency);
        assert!((w.as_slice()[0] - 100.0 / 180.0).abs() < 1e-12);
        assert_eq!(w.as_slice()[99], 5.0);

        let balanced = [0, 1, 2, 0, 1, 2];
        let w = compute_sample_weights(&balanced, WeightScheme::InverseFrequency);
        assert!(w.as_slice().iter().all(|&x| x == 1.0));

        let mut labels = vec![0; 60];
        labels.extend(vec![1; 30]);
        labels.extend(vec![2; 10]);
        let w = compute_sample_weights(&labels, WeightScheme::InverseFrequency);
        let w = w.as_slice();
        assert!((w[0] - 0.5556).abs() < 1e-4);
        assert!((w[60] - 1.1111).abs() < 1e-4);
        assert!((w[95] - 3.3333).abs() < 1e-4);

        let w = compute_sample_weights(&[0, 0, 1], WeightScheme::None);
        assert_eq!(w.as_slice(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn frequencies() {
        let d = toy(&[[0.0, 0.0]; 3], &[0, 0, 1], 2);
        let f = class_frequencies(&d);
        assert_eq!(f.into_iter().collect::<Vec<_>>(), [(0, 2), (1, 1)]);
    }
}
