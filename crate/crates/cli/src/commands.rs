//! Subcommand implementations. Each returns what it wrote so callers and
//! tests can inspect results without re-reading files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sbc_core::bundle::{BundledModel, ModelBundle};
use sbc_core::cascade::{order_classes, train_cascade, Outcome, Prediction, UnknownAction};
use sbc_core::dataset::{
    class_frequencies, clean, compute_sample_weights, load_csv, stratified_split, CleaningReport, Dataset,
};
use sbc_core::gbt::GbtModel;
use sbc_core::hpo::{tune_cascade, tune_multiclass, HpoResult};
use sbc_core::matrix::Matrix;
use sbc_core::metrics::{evaluate, normalized_to_delimited, timed, ConfusionMatrix, EvalSummary, Timings};

use crate::config::{Method, RunConfig};
use crate::error::{CliError, CliResult, Context, Stage};

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).at(Stage::Data, path.display())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).at(Stage::Data, dir.display())
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> CliResult<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::new(Stage::Config, format!("missing `{key}` in the configuration")))
}

pub fn load_dataset(path: &Path, cfg: &RunConfig) -> CliResult<Dataset> {
    let d = load_csv(path, &cfg.data.csv_options()).at(Stage::Data, path.display())?;
    Ok(d.with_label_name(cfg.data.label_column.clone()))
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: PathBuf,
    pub test: PathBuf,
    pub report: CleaningReport,
}

/// Cleans `data.input`, splits it and writes `train.csv`, `test.csv` and
/// `cleaning_report.txt` to the output directory.
pub fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    cfg.validate()?;
    let input = required(&cfg.data.input, "data.input")?;
    let raw = load_dataset(input, cfg)?;
    let (cleaned, report) = clean(&raw, &cfg.cleaning).at(Stage::Data, input.display())?;
    let (train, test) = stratified_split(&cleaned, &cfg.split).at(Stage::Data, "split")?;
    create_dir(&cfg.out)?;
    let paths = Prepared {
        train: cfg.out.join("train.csv"),
        test: cfg.out.join("test.csv"),
        report,
    };
    train.write_csv(&paths.train).at(Stage::Data, paths.train.display())?;
    test.write_csv(&paths.test).at(Stage::Data, paths.test.display())?;
    write(&cfg.out.join("cleaning_report.txt"), &paths.report.to_text())?;
    log::info!(
        "kept {} of {} rows: {} train, {} test",
        paths.report.rows_out,
        paths.report.rows_in,
        train.n_rows(),
        test.n_rows()
    );
    Ok(paths)
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: BundledModel,
    /// One result per tuned model: one for MCC, one per stage for SBC.
    pub hpo: Vec<HpoResult>,
    pub hpo_s: f64,
    pub train_s: f64,
}

/// Trains the configured method on `train`.
pub fn fit(cfg: &RunConfig, train: &Dataset) -> CliResult<Trained> {
    let base = cfg.base_params();
    let search = cfg.search();
    let grid = match search {
        Some(_) => Some(cfg.load_grid()?),
        None => None,
    };
    let trained = match (cfg.method, search) {
        (Method::Mcc, None) => {
            let w = compute_sample_weights(train.labels(), cfg.weights.scheme());
            let (m, secs) =
                timed(|| GbtModel::train_multiclass(train.features(), train.labels(), train.n_classes(), &w, &base));
            Trained {
                model: BundledModel::Mcc(m.at(Stage::Training, "multi-class model")?),
                hpo: Vec::new(),
                hpo_s: 0.0,
                train_s: secs,
            }
        }
        (Method::Mcc, Some(s)) => {
            let grid = grid.as_ref().expect("loaded above");
            let (r, secs) = timed(|| tune_multiclass(train, grid, &base, &cfg.cv, &s, cfg.weights.scheme()));
            let (m, result) = r.at(Stage::Training, "multi-class search")?;
            let hpo_s = result.wall_clock;
            Trained {
                model: BundledModel::Mcc(m),
                hpo: vec![result],
                hpo_s,
                train_s: (secs - hpo_s).max(0.0),
            }
        }
        (Method::Sbc, search) => {
            let o = order_classes(&class_frequencies(train)).at(Stage::Training, "class ordering")?;
            let cc = cfg.cascade_config();
            let (mut m, hpo, hpo_s, train_s) = match search {
                None => {
                    let (m, secs) = timed(|| train_cascade(train, &o, &[base], &cc));
                    (m.at(Stage::Training, "cascade")?, Vec::new(), 0.0, secs)
                }
                Some(s) => {
                    let grid = grid.as_ref().expect("loaded above");
                    let (m, results) =
                        tune_cascade(train, &o, grid, &base, &cfg.cv, &s, &cc).at(Stage::Training, "cascade search")?;
                    let hpo_s = results.iter().map(|r| r.wall_clock).sum();
                    let train_s = m.metadata().iter().map(|s| s.train_seconds).sum();
                    (m, results, hpo_s, train_s)
                }
            };
            if let Some(t) = &cfg.cascade.thresholds {
                if t.len() != o.n() {
                    return Err(CliError::new(
                        Stage::Config,
                        format!("{} thresholds given for {} stages", t.len(), o.n()),
                    ));
                }
                for (i, &v) in t.iter().enumerate() {
                    m.set_threshold(i, v).at(Stage::Config, "cascade.thresholds")?;
                }
            }
            Trained {
                model: BundledModel::Sbc(m),
                hpo,
                hpo_s,
                train_s,
            }
        }
    };
    Ok(trained)
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub class_names: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub summary: EvalSummary,
}

pub fn evaluate_model(
    model: &BundledModel,
    test: &Dataset,
    action: UnknownAction,
    hpo_s: f64,
    train_s: f64,
) -> CliResult<Evaluation> {
    let (preds, test_s) = timed(|| model.predict(test.features(), action));
    let preds = preds.at(Stage::Evaluation, "prediction")?;
    let classes: Vec<Option<usize>> = preds.iter().map(Prediction::class).collect();
    let timings = Timings { hpo_s, train_s, test_s };
    let (confusion, summary) =
        evaluate(test.labels(), &classes, test.n_classes(), timings).at(Stage::Evaluation, "metrics")?;
    Ok(Evaluation {
        class_names: test.class_names().to_vec(),
        confusion,
        summary,
    })
}

/// Writes `report.txt`, `summary.csv`, `confusion.csv` and
/// `confusion_normalized.csv` to `dir`.
pub fn write_evaluation(dir: &Path, e: &Evaluation) -> CliResult<()> {
    let class_names = &e.class_names;
    create_dir(dir)?;
    write(&dir.join("report.txt"), &e.summary.to_table(class_names))?;
    write(&dir.join("summary.csv"), &e.summary.to_records(class_names))?;
    write(&dir.join("confusion.csv"), &e.confusion.to_delimited(class_names, ','))?;
    write(
        &dir.join("confusion_normalized.csv"),
        &normalized_to_delimited(&e.confusion, class_names, ','),
    )
}

fn write_trials(dir: &Path, method: Method, hpo: &[HpoResult]) -> CliResult<()> {
    match method {
        Method::Mcc => {
            for r in hpo {
                write(&dir.join("hpo_trials.csv"), &r.to_csv())?;
            }
        }
        Method::Sbc => {
            for (i, r) in hpo.iter().enumerate() {
                write(&dir.join(format!("hpo_trials_stage{i}.csv")), &r.to_csv())?;
            }
        }
    }
    Ok(())
}

pub fn timing_rows(t: &Timings) -> String {
    format!(
        "HPO time    {:>10.2}\nTrain time  {:>10.2}\nTest time   {:>10.2}\n",
        t.hpo_s, t.train_s, t.test_s
    )
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub bundle: PathBuf,
    pub trained: Trained,
    pub evaluation: Option<Evaluation>,
}

/// Trains, writes `model.json` plus trial logs, and evaluates on
/// `data.test` when given.
pub fn train(cfg: &RunConfig) -> CliResult<TrainOutput> {
    cfg.validate()?;
    let train_path = required(&cfg.data.train, "data.train")?;
    let train = load_dataset(train_path, cfg)?;
    let test = match &cfg.data.test {
        Some(p) => Some(
            load_dataset(p, cfg)?
                .reencode_classes(train.class_names())
                .at(Stage::Data, p.display())?,
        ),
        None => None,
    };
    let trained = fit(cfg, &train)?;
    create_dir(&cfg.out)?;
    let snapshot = serde_json::to_value(cfg).at(Stage::Config, "configuration snapshot")?;
    let bundle = ModelBundle::new(trained.model.clone(), &train, snapshot).at(Stage::Training, "bundle")?;
    let bundle_path = cfg.out.join("model.json");
    bundle.save(&bundle_path).at(Stage::Data, bundle_path.display())?;
    write_trials(&cfg.out, cfg.method, &trained.hpo)?;

    let evaluation = match &test {
        Some(test) => {
            let e = evaluate_model(&trained.model, test, cfg.unknown_action, trained.hpo_s, trained.train_s)?;
            write_evaluation(&cfg.out, &e)?;
            Some(e)
        }
        None => None,
    };
    Ok(TrainOutput {
        bundle: bundle_path,
        trained,
        evaluation,
    })
}

/// The run configuration stored in a bundle.
fn bundle_config(bundle: &ModelBundle) -> CliResult<RunConfig> {
    serde_json::from_value(bundle.config.clone()).at(Stage::Evaluation, "bundle configuration")
}

/// Evaluates a saved bundle on a labeled CSV file.
pub fn evaluate_bundle(bundle_path: &Path, test_path: &Path, action: UnknownAction, out: &Path) -> CliResult<Evaluation> {
    let bundle = ModelBundle::load(bundle_path).at(Stage::Evaluation, bundle_path.display())?;
    let cfg = bundle_config(&bundle)?;
    let test = load_dataset(test_path, &cfg)?;
    let test = bundle.conform(&test).at(Stage::Evaluation, test_path.display())?;
    let e = evaluate_model(&bundle.model, &test, action, 0.0, 0.0)?;
    write_evaluation(out, &e)?;
    Ok(e)
}

/// `[0:0.912345;1:0.034000]`; empty for multi-class models.
pub fn format_trace(p: &Prediction) -> String {
    if p.trace.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = p.trace.iter().map(|e| format!("{}:{:.6}", e.stage, e.probability)).collect();
    format!("[{}]", parts.join(";"))
}

/// Reads feature columns by name from a CSV that may lack the label.
fn read_features(path: &Path, bundle: &ModelBundle, cfg: &RunConfig) -> CliResult<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(cfg.data.header)
        .from_path(path)
        .at(Stage::Data, path.display())?;
    let header: Vec<String> = if cfg.data.header {
        rdr.headers().at(Stage::Data, path.display())?.iter().map(|h| h.trim().to_string()).collect()
    } else {
        bundle.feature_names.clone()
    };
    let skip = |h: &str| h == bundle.label_column || cfg.data.drop_columns.iter().any(|d| d == h);
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !skip(&header[i])).collect();
    let names: Vec<String> = keep.iter().map(|&i| header[i].clone()).collect();
    bundle.check_features(&names).at(Stage::Evaluation, path.display())?;

    let mut data = Vec::new();
    let mut n_rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.at(Stage::Data, path.display())?;
        for &i in &keep {
            let cell = rec.get(i).unwrap_or("").trim();
            let v = if cfg.data.missing_tokens.iter().any(|m| m == cell) {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| {
                    CliError::new(
                        Stage::Data,
                        format!("{}: row {}: `{cell}` is not a number", path.display(), r + 1),
                    )
                })?
            };
            data.push(v);
        }
        n_rows += 1;
    }
    Matrix::new(n_rows, keep.len(), data).at(Stage::Data, path.display())
}

/// Predicts every row of `input`; returns CSV with columns
/// `row,prediction,trace`.
pub fn predict(bundle_path: &Path, input: &Path, action: UnknownAction) -> CliResult<String> {
    let bundle = ModelBundle::load(bundle_path).at(Stage::Evaluation, bundle_path.display())?;
    let cfg = bundle_config(&bundle)?;
    let x = read_features(input, &bundle, &cfg)?;
    let preds = bundle.predict(&x, action).at(Stage::Evaluation, "prediction")?;
    let mut out = String::from("row,prediction,trace\n");
    for (i, p) in preds.iter().enumerate() {
        let name = match p.outcome {
            Outcome::Known(c) => bundle.class_names[c].as_str(),
            Outcome::Unknown => "UNKNOWN",
        };
        let _ = writeln!(out, "{i},{name},{}", format_trace(p));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub methods: Vec<String>,
    /// Row labels: classes by descending training frequency, then the
    /// summary rows.
    pub rows: Vec<String>,
    /// `cells[row][method]`; failed methods hold the error text in the
    /// first row and are empty elsewhere.
    pub cells: Vec<Vec<String>>,
    pub failures: Vec<(String, String)>,
}

impl BenchmarkReport {
    pub fn to_table(&self) -> String {
        let first = self.rows.iter().map(String::len).max().unwrap_or(0).max(32);
        let widths: Vec<usize> = self
            .methods
            .iter()
            .enumerate()
            .map(|(j, m)| self.cells.iter().map(|r| r[j].len()).max().unwrap_or(0).max(m.len()))
            .collect();
        let mut s = format!("{:<first$}", "Class ID (Name | train | test)");
        for (m, w) in self.methods.iter().zip(&widths) {
            let _ = write!(s, "  {m:>w$}");
        }
        s.push('\n');
        for (label, row) in self.rows.iter().zip(&self.cells) {
            let _ = write!(s, "{label:<first$}");
            for (c, w) in row.iter().zip(&widths) {
                let _ = write!(s, "  {c:>w$}");
            }
            s.push('\n');
        }
        for (m, e) in &self.failures {
            let _ = writeln!(s, "{m} failed: {e}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let quote = |v: &str| {
            if v.contains([',', '"', '\n']) {
                format!("\"{}\"", v.replace('"', "\"\""))
            } else {
                v.to_string()
            }
        };
        let mut s = String::from("row");
        for m in &self.methods {
            s.push(',');
            s.push_str(&quote(m));
        }
        s.push('\n');
        for (label, row) in self.rows.iter().zip(&self.cells) {
            s.push_str(&quote(label));
            for c in row {
                s.push(',');
                s.push_str(&quote(c));
            }
            s.push('\n');
        }
        s
    }
}

/// Runs every method on the same train/test split and writes
/// `benchmark.txt` and `benchmark.csv` plus one directory per method.
pub fn benchmark(cfg: &RunConfig, methods: &[String]) -> CliResult<BenchmarkReport> {
    if methods.is_empty() {
        return Err(CliError::new(Stage::Config, "no methods to benchmark"));
    }
    let configs: Vec<RunConfig> = methods
        .iter()
        .map(|m| cfg.with_method_label(m))
        .collect::<CliResult<_>>()?;
    let train_path = required(&cfg.data.train, "data.train")?;
    let test_path = required(&cfg.data.test, "data.test")?;
    let train = load_dataset(train_path, cfg)?;
    let test = load_dataset(test_path, cfg)?
        .reencode_classes(train.class_names())
        .at(Stage::Data, test_path.display())?;
    let ordering = order_classes(&class_frequencies(&train)).at(Stage::Data, "class ordering")?;
    let test_counts = class_frequencies(&test);

    let mut rows: Vec<String> = ordering
        .classes()
        .iter()
        .zip(ordering.counts())
        .map(|(&c, &n)| {
            format!(
                "{c} ({} | {n} | {})",
                train.class_names()[c],
                test_counts.get(&c).copied().unwrap_or(0)
            )
        })
        .collect();
    rows.extend(
        ["Accuracy", "Average F1", "Std-dev F1", "HPO time", "Train time", "Test time"].map(String::from),
    );
    let mut cells = vec![Vec::with_capacity(methods.len()); rows.len()];
    let mut failures = Vec::new();
    create_dir(&cfg.out)?;

    // Sequential so that timing rows are not contended.
    for (label, mcfg) in methods.iter().zip(&configs) {
        log::info!("benchmark: {label}");
        let run = || -> CliResult<Evaluation> {
            let trained = fit(mcfg, &train)?;
            let e = evaluate_model(&trained.model, &test, mcfg.unknown_action, trained.hpo_s, trained.train_s)?;
            let dir = cfg.out.join(label);
            write_evaluation(&dir, &e)?;
            write_trials(&dir, mcfg.method, &trained.hpo)?;
            Ok(e)
        };
        match run() {
            Ok(e) => {
                let s = &e.summary;
                let mut col: Vec<String> =
                    ordering.classes().iter().map(|&c| format!("{:.2}", s.per_class[c].f1)).collect();
                col.extend([s.accuracy, s.avg_f1, s.std_f1].map(|v| format!("{v:.2}")));
                col.extend([s.timings.hpo_s, s.timings.train_s, s.timings.test_s].map(|v| format!("{v:.2}")));
                for (row, v) in cells.iter_mut().zip(col) {
                    row.push(v);
                }
            }
            Err(e) => {
                log::error!("{label}: {e}");
                failures.push((label.clone(), e.to_string()));
                for (i, row) in cells.iter_mut().enumerate() {
                    row.push(if i == 0 { "failed".to_string() } else { "-".to_string() });
                }
            }
        }
    }
    let report = BenchmarkReport {
        methods: methods.to_vec(),
        rows,
        cells,
        failures,
    };
    write(&cfg.out.join("benchmark.txt"), &report.to_table())?;
    write(&cfg.out.join("benchmark.csv"), &report.to_csv())?;
    Ok(report)
}
