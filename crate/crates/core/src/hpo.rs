//! Hyperparameter search: cross-validated grid search, halving grid search
//! (successive halving over training-row budgets), and pruned halving for
//! cascades, where each stage's grid is bounded by the previous stage's
//! best parameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{stage_view, train_stage, CascadeConfig, ClassOrdering, SbcModel, StageWeighting};
use crate::dataset::{compute_sample_weights, label_counts, Dataset, SampleWeights, WeightScheme};
use crate::error::{Error, Result};
use crate::gbt::{GbtModel, GbtParams, Objective};
use crate::matrix::Matrix;
use crate::metrics::{confusion, per_class_report, timed};

pub const PARAM_NAMES: [&str; 6] = [
    "learning_rate",
    "l2_lambda",
    "max_depth",
    "min_child_weight",
    "num_rounds",
    "subsample",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneDirection {
    /// Later stages may not exceed the parent's best value.
    UpperBound,
    /// Later stages may not go below the parent's best value.
    LowerBound,
    Unpruned,
}

impl PruneDirection {
    /// Shallower, smaller and coarser trees for the smaller stage datasets.
    pub fn default_for(name: &str) -> PruneDirection {
        match name {
            "max_depth" | "num_rounds" => PruneDirection::UpperBound,
            "min_child_weight" => PruneDirection::LowerBound,
            _ => PruneDirection::Unpruned,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub values: Vec<f64>,
    pub prune: PruneDirection,
}

/// Candidate values per parameter. Names iterate in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpGrid {
    axes: BTreeMap<String, ParamAxis>,
}

/// Grid file entry; `prune` falls back to the parameter's default direction.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisSpec {
    values: Vec<f64>,
    prune: Option<PruneDirection>,
}

impl<'de> Deserialize<'de> for HpGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let specs = BTreeMap::<String, AxisSpec>::deserialize(d)?;
        let axes = specs
            .into_iter()
            .map(|(name, s)| {
                let prune = s.prune.unwrap_or_else(|| PruneDirection::default_for(&name));
                (name, ParamAxis { values: s.values, prune })
            })
            .collect();
        HpGrid::new(axes).map_err(serde::de::Error::custom)
    }
}

pub fn param_value(p: &GbtParams, name: &str) -> Option<f64> {
    Some(match name {
        "num_rounds" => p.num_rounds as f64,
        "learning_rate" => p.learning_rate,
        "max_depth" => p.max_depth as f64,
        "min_child_weight" => p.min_child_weight,
        "l2_lambda" => p.l2_lambda,
        "subsample" => p.subsample,
        _ => return None,
    })
}

fn set_param(p: &mut GbtParams, name: &str, v: f64) {
    match name {
        "num_rounds" => p.num_rounds = v as usize,
        "learning_rate" => p.learning_rate = v,
        "max_depth" => p.max_depth = v as usize,
        "min_child_weight" => p.min_child_weight = v,
        "l2_lambda" => p.l2_lambda = v,
        "subsample" => p.subsample = v,
        _ => unreachable!("unknown parameter {name}"),
    }
}

impl HpGrid {
    pub fn new(axes: BTreeMap<String, ParamAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid has no parameters".to_string()));
        }
        for (name, axis) in &axes {
            if !PARAM_NAMES.contains(&name.as_str()) {
                return Err(Error::InvalidGrid(format!("unknown parameter `{name}`")));
            }
            if axis.values.is_empty() {
                return Err(Error::InvalidGrid(format!("`{name}` has no candidates")));
            }
            if axis.values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidGrid(format!(
                    "`{name}` candidates must be strictly ascending"
                )));
            }
            let integral = matches!(name.as_str(), "num_rounds" | "max_depth");
            for &v in &axis.values {
                if integral && (v.fract() != 0.0 || v < 1.0) {
                    return Err(Error::InvalidGrid(format!("`{name}` needs positive integers, got {v}")));
                }
                let mut p = GbtParams::default();
                set_param(&mut p, name, v);
                p.validate()
                    .map_err(|e| Error::InvalidGrid(format!("`{name}` = {v}: {e}")))?;
            }
        }
        Ok(HpGrid { axes })
    }

    /// One axis per entry, each with its default prune direction.
    pub fn from_values(values: &[(&str, &[f64])]) -> Result<Self> {
        HpGrid::new(
            values
                .iter()
                .map(|&(name, v)| {
                    (
                        name.to_string(),
                        ParamAxis {
                            values: v.to_vec(),
                            prune: PruneDirection::default_for(name),
                        },
                    )
                })
                .collect(),
        )
    }

    /// A small general-purpose grid of 12 combinations.
    pub fn default_grid() -> Self {
        HpGrid::from_values(&[
            ("max_depth", &[3.0, 5.0, 7.0]),
            ("num_rounds", &[50.0, 100.0]),
            ("learning_rate", &[0.1, 0.3]),
        ])
        .expect("default grid is valid")
    }

    pub fn axes(&self) -> &BTreeMap<String, ParamAxis> {
        &self.axes
    }

    pub fn size(&self) -> usize {
        self.axes.values().map(|a| a.values.len()).product()
    }

    /// Every combination applied to `base`, the last parameter name varying
    /// fastest.
    pub fn candidates(&self, base: &GbtParams) -> Vec<GbtParams> {
        let axes: Vec<(&String, &ParamAxis)> = self.axes.iter().collect();
        let mut idx = vec![0usize; axes.len()];
        let mut out = Vec::with_capacity(self.size());
        loop {
            let mut p = *base;
            for ((name, axis), &i) in axes.iter().zip(&idx) {
                set_param(&mut p, name, axis.values[i]);
            }
            out.push(p);
            let mut k = axes.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < axes[k].1.values.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        for (name, axis) in &self.axes {
            let values: Vec<String> = axis.values.iter().map(|v| format!("{v:?}")).collect();
            let prune = serde_json::to_value(axis.prune).expect("enum serializes");
            let _ = writeln!(
                s,
                "[{name}]\nvalues = [{}]\nprune = {}\n",
                values.join(", "),
                prune
            );
        }
        s
    }
}

/// Bounds each prunable axis by `best_prev`'s value; that value always stays.
pub fn prune_grid(grid: &HpGrid, best_prev: &GbtParams) -> Result<HpGrid> {
    let mut axes = BTreeMap::new();
    for (name, axis) in &grid.axes {
        let best = param_value(best_prev, name).expect("grid names are validated");
        if !axis.values.contains(&best) {
            return Err(Error::ValueNotInGrid {
                name: name.clone(),
                value: best,
            });
        }
        let values = axis
            .values
            .iter()
            .copied()
            .filter(|&v| match axis.prune {
                PruneDirection::UpperBound => v <= best,
                PruneDirection::LowerBound => v >= best,
                PruneDirection::Unpruned => true,
            })
            .collect();
        axes.insert(
            name.clone(),
            ParamAxis {
                values,
                prune: axis.prune,
            },
        );
    }
    Ok(HpGrid { axes })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    MacroF1,
    Accuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub metric: Metric,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 3,
            metric: Metric::MacroF1,
            stratified: true,
            seed: 0,
        }
    }
}

/// Per-row training weights for cross-validation fits.
#[derive(Debug, Clone, Copy)]
pub enum FoldWeights<'a> {
    None,
    /// Recomputed on each fold's training labels.
    InverseFrequency,
    /// Fixed weight per row of the problem.
    Fixed(&'a [f64]),
}

impl From<WeightScheme> for FoldWeights<'_> {
    fn from(s: WeightScheme) -> Self {
        match s {
            WeightScheme::None => FoldWeights::None,
            WeightScheme::InverseFrequency => FoldWeights::InverseFrequency,
        }
    }
}

/// A supervised problem to tune on.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub x: &'a Matrix,
    pub y: &'a [usize],
    pub objective: Objective,
    pub n_classes: usize,
    pub weights: FoldWeights<'a>,
}

impl<'a> Problem<'a> {
    pub fn binary(x: &'a Matrix, y: &'a [usize], weights: FoldWeights<'a>) -> Self {
        Problem {
            x,
            y,
            objective: Objective::BinaryLogistic,
            n_classes: 2,
            weights,
        }
    }

    pub fn multiclass(x: &'a Matrix, y: &'a [usize], n_classes: usize, weights: FoldWeights<'a>) -> Self {
        Problem {
            x,
            y,
            objective: Objective::MulticlassSoftmax,
            n_classes,
            weights,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    fn n_present(&self) -> usize {
        label_counts(self.y).len()
    }

    fn fit(&self, rows: &[usize], params: &GbtParams) -> Result<GbtModel> {
        let x = self.x.select_rows(rows);
        let y: Vec<usize> = rows.iter().map(|&r| self.y[r]).collect();
        let w = match self.weights {
            FoldWeights::None => SampleWeights::uniform(rows.len()),
            FoldWeights::InverseFrequency => compute_sample_weights(&y, WeightScheme::InverseFrequency),
            FoldWeights::Fixed(w) => SampleWeights::from_vec(rows.iter().map(|&r| w[r]).collect())?,
        };
        match self.objective {
            Objective::BinaryLogistic => GbtModel::train_binary(&x, &y, &w, params),
            Objective::MulticlassSoftmax => GbtModel::train_multiclass(&x, &y, self.n_classes, &w, params),
        }
    }

    /// Held-out score of a model fit on `train_rows`.
    fn score(&self, model: &GbtModel, test_rows: &[usize], metric: Metric) -> Result<f64> {
        let x = self.x.select_rows(test_rows);
        let truth: Vec<usize> = test_rows.iter().map(|&r| self.y[r]).collect();
        let pred = model.predict_class(&x, 0.5)?;
        Ok(score_labels(&truth, &pred, self.n_classes, metric))
    }
}

/// Accuracy, or the unweighted mean F1 over classes present in `truth`.
pub fn score_labels(truth: &[usize], pred: &[usize], n_classes: usize, metric: Metric) -> f64 {
    let cm = confusion(truth, pred, n_classes).expect("labels are in range");
    match metric {
        Metric::Accuracy => cm.trace() as f64 / cm.total() as f64,
        Metric::MacroF1 => {
            let rep = per_class_report(&cm);
            let present: Vec<f64> = rep.iter().filter(|r| r.support > 0).map(|r| r.f1).collect();
            present.iter().sum::<f64>() / present.len() as f64
        }
    }
}

/// Assigns `rows` to folds. Stratified assignment shuffles each class and
/// deals its rows round-robin, continuing where the previous class stopped.
pub fn assign_folds(y: &[usize], rows: &[usize], folds: usize, stratified: bool, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = if stratified {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &r in rows {
            by_class.entry(y[r]).or_default().push(r);
        }
        by_class.into_values().collect()
    } else {
        vec![rows.to_vec()]
    };
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for mut g in groups {
        g.shuffle(&mut rng);
        for r in g {
            out[next].push(r);
            next = (next + 1) % folds;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

fn cross_validate_rows(problem: &Problem, rows: &[usize], params: &GbtParams, cv: &CvConfig) -> Result<f64> {
    if cv.folds < 2 {
        return Err(Error::InvalidParams("cross-validation needs at least 2 folds".to_string()));
    }
    let present = label_counts(&rows.iter().map(|&r| problem.y[r]).collect::<Vec<_>>()).len();
    let folds = assign_folds(problem.y, rows, cv.folds, cv.stratified, cv.seed);
    let mut in_fold = vec![usize::MAX; problem.n_rows()];
    for (f, fold) in folds.iter().enumerate() {
        for &r in fold {
            in_fold[r] = f;
        }
    }
    let mut total = 0.0;
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<usize> = rows.iter().copied().filter(|&r| in_fold[r] != f).collect();
        let classes_of = |idx: &[usize]| label_counts(&idx.iter().map(|&r| problem.y[r]).collect::<Vec<_>>()).len();
        if classes_of(test) != present || classes_of(&train) != present {
            return Err(Error::FoldDegenerate(f));
        }
        let model = problem.fit(&train, params)?;
        total += problem.score(&model, test, cv.metric)?;
    }
    Ok(total / folds.len() as f64)
}

/// Mean held-out score over `cv.folds` folds of the whole problem.
pub fn cross_validate(problem: &Problem, params: &GbtParams, cv: &CvConfig) -> Result<f64> {
    let rows: Vec<usize> = (0..problem.n_rows()).collect();
    cross_validate_rows(problem, &rows, params, cv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub iteration: usize,
    /// Position in the grid's enumeration order.
    pub candidate: usize,
    pub params: GbtParams,
    pub resources: usize,
    pub score: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpoResult {
    pub best_params: GbtParams,
    pub best_score: f64,
    pub grid_size: usize,
    pub trials: Vec<Trial>,
    pub wall_clock: f64,
}

impl HpoResult {
    /// CSV trial log.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "iteration,candidate,resources,score,seconds,num_rounds,learning_rate,max_depth,min_child_weight,l2_lambda,subsample\n",
        );
        for t in &self.trials {
            let p = &t.params;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                t.iteration,
                t.candidate,
                t.resources,
                t.score,
                t.seconds,
                p.num_rounds,
                p.learning_rate,
                p.max_depth,
                p.min_child_weight,
                p.l2_lambda,
                p.subsample
            );
        }
        s
    }

    /// Trials of the last iteration.
    pub fn final_trials(&self) -> impl Iterator<Item = &Trial> {
        let last = self.trials.last().map_or(0, |t| t.iteration);
        self.trials.iter().filter(move |t| t.iteration == last)
    }
}

fn evaluate_candidates(
    problem: &Problem,
    cands: &[(usize, GbtParams)],
    rows: &[usize],
    cv: &CvConfig,
    iteration: usize,
) -> Result<Vec<Trial>> {
    cands
        .par_iter()
        .map(|&(candidate, params)| {
            let (score, seconds) = timed(|| cross_validate_rows(problem, rows, &params, cv));
            Ok(Trial {
                iteration,
                candidate,
                params,
                resources: rows.len(),
                score: score?,
                seconds,
            })
        })
        .collect()
}

/// Highest score, earliest enumeration index on ties.
fn best_trial(trials: &[Trial]) -> &Trial {
    let mut best = &trials[0];
    for t in &trials[1..] {
        if t.score > best.score || (t.score == best.score && t.candidate < best.candidate) {
            best = t;
        }
    }
    best
}

/// Evaluates every combination on the full problem.
pub fn grid_search(grid: &HpGrid, base: &GbtParams, problem: &Problem, cv: &CvConfig) -> Result<HpoResult> {
    let (trials, wall_clock) = timed(|| {
        let cands: Vec<(usize, GbtParams)> = grid.candidates(base).into_iter().enumerate().collect();
        let rows: Vec<usize> = (0..problem.n_rows()).collect();
        evaluate_candidates(problem, &cands, &rows, cv, 0)
    });
    let trials = trials?;
    let best = best_trial(&trials);
    Ok(HpoResult {
        best_params: best.params,
        best_score: best.score,
        grid_size: grid.size(),
        trials: trials.clone(),
        wall_clock,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HalvingConfig {
    pub factor: usize,
    /// Rows per candidate in the first iteration. `None` picks the budget
    /// that reaches the full dataset when one candidate remains.
    pub min_resources: Option<usize>,
    pub seed: u64,
}

impl Default for HalvingConfig {
    fn default() -> Self {
        Self {
            factor: 3,
            min_resources: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rung {
    pub candidates: usize,
    pub resources: usize,
}

/// Successive-halving schedule. Candidate counts follow
/// `n_t = ceil(n_{t-1} / factor)` and resources `r_t = min(r_{t-1} * factor,
/// n_max)`. The schedule ends at the first rung with one candidate or with
/// the full data. A single candidate is scored once on the full data.
pub fn halving_schedule(n0: usize, factor: usize, min_resources: usize, n_max: usize) -> Vec<Rung> {
    if n0 == 0 || n_max == 0 {
        return Vec::new();
    }
    if n0 == 1 {
        return vec![Rung {
            candidates: 1,
            resources: n_max,
        }];
    }
    let mut rungs = Vec::new();
    let mut n = n0;
    let mut r = min_resources.clamp(1, n_max);
    loop {
        rungs.push(Rung {
            candidates: n,
            resources: r,
        });
        if r >= n_max || n == 1 {
            return rungs;
        }
        n = n.div_ceil(factor);
        r = r.saturating_mul(factor).min(n_max);
    }
}

/// Number of reductions until one candidate is left.
fn reductions(n0: usize, factor: usize) -> u32 {
    let mut n = n0;
    let mut k = 0;
    while n > 1 {
        n = n.div_ceil(factor);
        k += 1;
    }
    k
}

/// `size` rows (or more, to honor `min_per_class`) drawn per class in
/// proportion to class frequency.
pub fn stratified_subsample(y: &[usize], size: usize, min_per_class: usize, seed: u64) -> Vec<usize> {
    let n = y.len();
    if size >= n {
        return (0..n).collect();
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (r, &c) in y.iter().enumerate() {
        by_class.entry(c).or_default().push(r);
    }
    let groups: Vec<Vec<usize>> = by_class.into_values().collect();
    let exact: Vec<f64> = groups.iter().map(|g| size as f64 * g.len() as f64 / n as f64).collect();
    let mut alloc: Vec<usize> = groups
        .iter()
        .zip(&exact)
        .map(|(g, &e)| (e.floor() as usize).max(min_per_class).min(g.len()))
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut total: usize = alloc.iter().sum();
    'fill: while total < size {
        let mut progressed = false;
        for &g in &order {
            if total >= size {
                break 'fill;
            }
            if alloc[g] < groups[g].len() {
                alloc[g] += 1;
                total += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(total);
    for (mut g, k) in groups.into_iter().zip(alloc) {
        g.shuffle(&mut rng);
        out.extend_from_slice(&g[..k]);
    }
    out.sort_unstable();
    out
}

/// Successive halving over training-row budgets.
pub fn halving_grid_search(
    grid: &HpGrid,
    base: &GbtParams,
    problem: &Problem,
    cv: &CvConfig,
    hc: &HalvingConfig,
) -> Result<HpoResult> {
    if hc.factor < 2 {
        return Err(Error::InvalidParams("halving factor must be at least 2".to_string()));
    }
    let n_max = problem.n_rows();
    let floor = cv.folds * problem.n_present();
    let min_resources = match hc.min_resources {
        Some(r) if r < floor => {
            return Err(Error::InvalidParams(format!(
                "min_resources {r} is below folds x classes = {floor}"
            )))
        }
        Some(r) => r,
        None => {
            let k = reductions(grid.size(), hc.factor);
            let shrink = (hc.factor as f64).powi(k as i32);
            ((n_max as f64 / shrink).ceil() as usize).max(floor)
        }
    };
    let candidates = grid.candidates(base);
    let schedule = halving_schedule(candidates.len(), hc.factor, min_resources, n_max);

    let (result, wall_clock) = timed(|| -> Result<(Vec<Trial>, GbtParams, f64)> {
        let mut alive: Vec<(usize, GbtParams)> = candidates.into_iter().enumerate().collect();
        let mut trials = Vec::new();
        for (t, rung) in schedule.iter().enumerate() {
            debug_assert_eq!(alive.len(), rung.candidates);
            let rows = stratified_subsample(
                problem.y,
                rung.resources,
                cv.folds,
                hc.seed.wrapping_add(t as u64),
            );
            let mut scored = evaluate_candidates(problem, &alive, &rows, cv, t)?;
            trials.extend(scored.iter().cloned());
            if t + 1 == schedule.len() {
                let best = best_trial(&scored);
                return Ok((trials, best.params, best.score));
            }
            scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.candidate.cmp(&b.candidate)));
            scored.truncate(schedule[t + 1].candidates);
            scored.sort_by_key(|s| s.candidate);
            alive = scored.into_iter().map(|s| (s.candidate, s.params)).collect();
        }
        unreachable!("schedule is never empty for a non-empty grid")
    });
    let (trials, best_params, best_score) = result?;
    Ok(HpoResult {
        best_params,
        best_score,
        grid_size: grid.size(),
        trials,
        wall_clock,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Search {
    Grid,
    Halving(HalvingConfig),
    /// Halving with each cascade stage's grid bounded by the previous
    /// stage's best parameters. Equivalent to `Halving` outside cascades.
    PrunedHalving(HalvingConfig),
}

pub fn search(grid: &HpGrid, base: &GbtParams, problem: &Problem, cv: &CvConfig, s: &Search) -> Result<HpoResult> {
    match s {
        Search::Grid => grid_search(grid, base, problem, cv),
        Search::Halving(hc) | Search::PrunedHalving(hc) => halving_grid_search(grid, base, problem, cv, hc),
    }
}

/// Folds usable on `y`: `cv.folds` reduced to the smallest class count.
fn effective_cv(y: &[usize], cv: &CvConfig) -> Result<CvConfig> {
    let min = label_counts(y).values().copied().min().unwrap_or(0);
    if min < 2 {
        return Err(Error::FoldDegenerate(0));
    }
    if cv.stratified && min < cv.folds {
        log::warn!("reducing cross-validation folds from {} to {min}", cv.folds);
        return Ok(CvConfig { folds: min, ..*cv });
    }
    Ok(*cv)
}

/// Tunes and trains a multi-class model on a dataset.
pub fn tune_multiclass(
    train: &Dataset,
    grid: &HpGrid,
    base: &GbtParams,
    cv: &CvConfig,
    s: &Search,
    weights: WeightScheme,
) -> Result<(GbtModel, HpoResult)> {
    let cv = effective_cv(train.labels(), cv)?;
    let problem = Problem::multiclass(train.features(), train.labels(), train.n_classes(), weights.into());
    let result = search(grid, base, &problem, &cv, s)?;
    let w = compute_sample_weights(train.labels(), weights);
    let model = GbtModel::train_multiclass(
        train.features(),
        train.labels(),
        train.n_classes(),
        &w,
        &result.best_params,
    )?;
    Ok((model, result))
}

/// Tunes each cascade stage in rank order and trains it with its best
/// parameters. With [`Search::PrunedHalving`], stage `i > 0` searches the
/// previous stage's grid pruned by that stage's best parameters.
pub fn tune_cascade(
    train: &Dataset,
    o: &ClassOrdering,
    grid: &HpGrid,
    base: &GbtParams,
    cv: &CvConfig,
    s: &Search,
    cfg: &CascadeConfig,
) -> Result<(SbcModel, Vec<HpoResult>)> {
    let n = o.n();
    let original_weights = match cfg.weighting {
        StageWeighting::OriginalInverseFrequency => {
            Some(compute_sample_weights(train.labels(), WeightScheme::InverseFrequency))
        }
        _ => None,
    };
    let mut stage_grid = grid.clone();
    let mut stages = Vec::with_capacity(n);
    let mut metadata = Vec::with_capacity(n);
    let mut results = Vec::with_capacity(n);
    for i in 0..n {
        let run = || -> Result<_> {
            let view = stage_view(train, o, i, &cfg.last_stage)?;
            let x = view.features(train);
            let fixed;
            let weights = match cfg.weighting {
                StageWeighting::None => FoldWeights::None,
                StageWeighting::PerStageInverseFrequency => FoldWeights::InverseFrequency,
                StageWeighting::OriginalInverseFrequency => {
                    let w = original_weights.as_ref().expect("computed above");
                    fixed = w.select(&view.row_indices);
                    FoldWeights::Fixed(fixed.as_slice())
                }
            };
            let stage_cv = effective_cv(&view.binary_labels, cv)?;
            let problem = Problem::binary(&x, &view.binary_labels, weights);
            let result = search(&stage_grid, base, &problem, &stage_cv, s)?;
            Ok((view, result))
        };
        let (view, result) = run().map_err(|e| e.at_stage(i))?;
        let (model, meta) = train_stage(train, &view, &result.best_params, cfg.weighting)?;
        if matches!(s, Search::PrunedHalving(_)) {
            stage_grid = prune_grid(&stage_grid, &result.best_params).map_err(|e| e.at_stage(i))?;
        }
        stages.push(model);
        metadata.push(meta);
        results.push(result);
    }
    let model = SbcModel::from_parts(o.clone(), stages, vec![cfg.threshold; n], *cfg, metadata)?;
    Ok((model, results))
}

/// Pruned halving grid search over a cascade.
pub fn phgs_cascade(
    train: &Dataset,
    o: &ClassOrdering,
    grid: &HpGrid,
    base: &GbtParams,
    cv: &CvConfig,
    hc: &HalvingConfig,
    cfg: &CascadeConfig,
) -> Result<(SbcModel, Vec<HpoResult>)> {
    tune_cascade(train, o, grid, base, cv, &Search::PrunedHalving(*hc), cfg)
}
