//! Closed-set evaluation: confusion matrices, per-class precision / recall /
//! F1, the average and population standard deviation of per-class F1, and
//! wall-clock timing.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes. When `with_unknown` is
/// set there is one extra column counting rejected rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    with_unknown: bool,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        let width = rows.first().map_or(n, Vec::len);
        if width != n && width != n + 1 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidParams(
                "confusion rows must have n or n + 1 columns".to_string(),
            ));
        }
        Ok(ConfusionMatrix {
            n_classes: n,
            with_unknown: width == n + 1,
            counts: rows.concat(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn has_unknown_column(&self) -> bool {
        self.with_unknown
    }

    pub fn n_cols(&self) -> usize {
        self.n_classes + usize::from(self.with_unknown)
    }

    #[inline]
    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_cols() + predicted]
    }

    /// Count of rows of class `truth` that were rejected.
    pub fn unknown(&self, truth: usize) -> u64 {
        if self.with_unknown {
            self.get(truth, self.n_classes)
        } else {
            0
        }
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        let w = self.n_cols();
        &self.counts[truth * w..(truth + 1) * w]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.row(truth).iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.n_classes).map(|t| self.get(t, predicted)).sum()
    }

    /// Delimiter-separated grid with a header row of predicted class names.
    pub fn to_delimited(&self, names: &[String], delimiter: char) -> String {
        self.render(names, delimiter, |t, p| self.get(t, p).to_string())
    }

    fn render(&self, names: &[String], delimiter: char, cell: impl Fn(usize, usize) -> String) -> String {
        let mut s = String::from("true\\pred");
        for p in 0..self.n_cols() {
            s.push(delimiter);
            s.push_str(names.get(p).map_or("UNKNOWN", String::as_str));
        }
        s.push('\n');
        for t in 0..self.n_classes {
            s.push_str(&names[t]);
            for p in 0..self.n_cols() {
                s.push(delimiter);
                s.push_str(&cell(t, p));
            }
            s.push('\n');
        }
        s
    }
}

/// Confusion matrix of closed-set predictions.
pub fn confusion(y_true: &[usize], y_pred: &[usize], n: usize) -> Result<ConfusionMatrix> {
    let pred: Vec<Option<usize>> = y_pred.iter().map(|&p| Some(p)).collect();
    confusion_open(y_true, &pred, n)
}

/// Confusion matrix where `None` marks a rejected (Unknown) prediction. The
/// Unknown column exists only if some prediction is `None`.
pub fn confusion_open(y_true: &[usize], y_pred: &[Option<usize>], n: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let with_unknown = y_pred.iter().any(Option::is_none);
    let width = n + usize::from(with_unknown);
    let mut counts = vec![0u64; n * width];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n {
            return Err(Error::LabelOutOfRange { label: t, n });
        }
        let col = match p {
            Some(p) if p >= n => return Err(Error::LabelOutOfRange { label: p, n }),
            Some(p) => p,
            None => n,
        };
        counts[t * width + col] += 1;
    }
    Ok(ConfusionMatrix {
        n_classes: n,
        with_unknown,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Precision, recall and F1 per class; an empty denominator yields 0.
/// Rejected rows count against recall but not against any class's precision.
pub fn per_class_report(cm: &ConfusionMatrix) -> Vec<ClassReport> {
    (0..cm.n_classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let support = cm.row_sum(c);
            let precision = ratio(tp, cm.col_sum(c));
            let recall = ratio(tp, support);
            ClassReport {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub hpo_s: f64,
    pub train_s: f64,
    pub test_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub accuracy: f64,
    pub avg_f1: f64,
    pub std_f1: f64,
    pub per_class: Vec<ClassReport>,
    pub timings: Timings,
}

/// Unweighted mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn summarize(cm: &ConfusionMatrix, per_class: Vec<ClassReport>, timings: Timings) -> EvalSummary {
    let f1: Vec<f64> = per_class.iter().map(|r| r.f1).collect();
    let (avg_f1, std_f1) = mean_std(&f1);
    EvalSummary {
        accuracy: ratio(cm.trace(), cm.total()),
        avg_f1,
        std_f1,
        per_class,
        timings,
    }
}

/// Confusion matrix, report and summary in one step.
pub fn evaluate(
    y_true: &[usize],
    y_pred: &[Option<usize>],
    n: usize,
    timings: Timings,
) -> Result<(ConfusionMatrix, EvalSummary)> {
    let cm = confusion_open(y_true, y_pred, n)?;
    let report = per_class_report(&cm);
    let summary = summarize(&cm, report, timings);
    Ok((cm, summary))
}

impl EvalSummary {
    /// Fixed-width table: one line per class, then the summary rows.
    pub fn to_table(&self, class_names: &[String]) -> String {
        let width = class_names.iter().map(String::len).max().unwrap_or(5).max(12);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}",
            "class", "precision", "recall", "f1", "support"
        );
        for (name, r) in class_names.iter().zip(&self.per_class) {
            let _ = writeln!(
                s,
                "{name:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}",
                r.precision, r.recall, r.f1, r.support
            );
        }
        let _ = writeln!(s);
        for (k, v) in [
            ("Accuracy", self.accuracy),
            ("Average F1", self.avg_f1),
            ("Std-dev F1", self.std_f1),
        ] {
            let _ = writeln!(s, "{k:<width$}  {v:>9.4}");
        }
        for (k, v) in [
            ("HPO time", self.timings.hpo_s),
            ("Train time", self.timings.train_s),
            ("Test time", self.timings.test_s),
        ] {
            let _ = writeln!(s, "{k:<width$}  {v:>9.2}");
        }
        s
    }

    /// CSV with one record per class followed by one summary record.
    pub fn to_records(&self, class_names: &[String]) -> String {
        let mut s = String::from("record,class,precision,recall,f1,support,accuracy,avg_f1,std_f1,hpo_s,train_s,test_s\n");
        for (name, r) in class_names.iter().zip(&self.per_class) {
            let _ = writeln!(
                s,
                "class,{},{},{},{},{},,,,,,",
                csv_field(name),
                r.precision,
                r.recall,
                r.f1,
                r.support
            );
        }
        let _ = writeln!(
            s,
            "summary,,,,,{},{},{},{},{},{},{}",
            self.per_class.iter().map(|r| r.support).sum::<u64>(),
            self.accuracy,
            self.avg_f1,
            self.std_f1,
            self.timings.hpo_s,
            self.timings.train_s,
            self.timings.test_s
        );
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rows rescaled to percentages; rows without support stay zero.
pub fn normalize_percent(cm: &ConfusionMatrix) -> Vec<Vec<f64>> {
    (0..cm.n_classes())
        .map(|t| {
            let total = cm.row_sum(t);
            cm.row(t)
                .iter()
                .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                .collect()
        })
        .collect()
}

/// Normalized matrix as a delimited grid, two decimals.
pub fn normalized_to_delimited(cm: &ConfusionMatrix, names: &[String], delimiter: char) -> String {
    let pct = normalize_percent(cm);
    cm.render(names, delimiter, |t, p| format!("{:.2}", pct[t][p]))
}

/// Runs `op` and returns its result with the elapsed wall-clock seconds.
pub fn timed<T>(op: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = op();
    (out, start.elapsed().as_secs_f64())
}

/// Accumulates wall-clock time over several timed sections.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stopwatch {
    total: f64,
}

impl Stopwatch {
    pub fn time<T>(&mut self, op: impl FnOnce() -> T) -> T {
        let (out, s) = timed(op);
        self.total += s;
        out
    }

    pub fn seconds(&self) -> f64 {
        self.total
    }
}
