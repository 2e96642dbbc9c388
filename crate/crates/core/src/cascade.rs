//! Sequential binary classification: a cascade of binary models trained in
//! decreasing class-frequency order.
//!
//! Stage `i` separates class `C_i` (positive) from the rarer classes
//! `C_{i+1}..C_{n-1}` (negative). The rarest class has nobody left to be
//! separated from, so its stage samples negatives from the majority class or
//! from all other classes. Inference walks the stages in order and stops at
//! the first one whose probability reaches its threshold; rows rejected by
//! every stage come out as [`Outcome::Unknown`].

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{compute_sample_weights, Dataset, SampleWeights, WeightScheme};
use crate::error::{Error, Result};
use crate::gbt::{GbtModel, GbtParams, Objective};
use crate::matrix::Matrix;
use crate::metrics::timed;

const FORMAT_VERSION: u32 = 1;

/// Bijection between class ids and frequency ranks; rank 0 is the majority
/// class. Equal counts are ranked by ascending class id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OrderingRecord", into = "OrderingRecord")]
pub struct ClassOrdering {
    class_at: Vec<usize>,
    counts: Vec<usize>,
    rank_of: BTreeMap<usize, usize>,
}

#[derive(Serialize, Deserialize)]
struct OrderingRecord {
    class_at: Vec<usize>,
    counts: Vec<usize>,
}

impl From<ClassOrdering> for OrderingRecord {
    fn from(o: ClassOrdering) -> Self {
        OrderingRecord {
            class_at: o.class_at,
            counts: o.counts,
        }
    }
}

impl TryFrom<OrderingRecord> for ClassOrdering {
    type Error = String;

    fn try_from(r: OrderingRecord) -> Result<Self, String> {
        if r.class_at.len() != r.counts.len() || r.class_at.len() < 2 {
            return Err("ordering needs at least two classes with counts".to_string());
        }
        let freqs: BTreeMap<usize, usize> =
            r.class_at.iter().copied().zip(r.counts.iter().copied()).collect();
        let o = order_classes(&freqs).map_err(|e| e.to_string())?;
        if o.class_at != r.class_at {
            return Err("stored ordering is not frequency-sorted".to_string());
        }
        Ok(o)
    }
}

/// Ranks classes by decreasing frequency.
pub fn order_classes(freqs: &BTreeMap<usize, usize>) -> Result<ClassOrdering> {
    let mut classes: Vec<(usize, usize)> = freqs
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(&c, &n)| (c, n))
        .collect();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }
    classes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let class_at: Vec<usize> = classes.iter().map(|c| c.0).collect();
    let counts = classes.iter().map(|c| c.1).collect();
    let rank_of = class_at.iter().enumerate().map(|(r, &c)| (c, r)).collect();
    Ok(ClassOrdering {
        class_at,
        counts,
        rank_of,
    })
}

impl ClassOrdering {
    pub fn n(&self) -> usize {
        self.class_at.len()
    }

    /// Class id at frequency rank `rank`.
    pub fn class_at(&self, rank: usize) -> usize {
        self.class_at[rank]
    }

    pub fn classes(&self) -> &[usize] {
        &self.class_at
    }

    pub fn rank_of(&self, class: usize) -> Option<usize> {
        self.rank_of.get(&class).copied()
    }

    /// Training counts, indexed by rank.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// The binarized training subset of one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageView {
    pub stage: usize,
    /// Indices into the training dataset, in dataset order.
    pub row_indices: Vec<usize>,
    /// 1 for rows of the stage's class, 0 otherwise.
    pub binary_labels: Vec<usize>,
}

impl StageView {
    pub fn len(&self) -> usize {
        self.row_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_indices.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.binary_labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn features(&self, train: &Dataset) -> Matrix {
        train.features().select_rows(&self.row_indices)
    }
}

/// Stage `i < n - 1`: every row of classes `C_i..C_{n-1}`.
pub fn binarize_stage(train: &Dataset, o: &ClassOrdering, i: usize) -> Result<StageView> {
    let n = o.n();
    if i + 1 >= n {
        return Err(Error::StageOutOfRange { stage: i, n });
    }
    let mut row_indices = Vec::new();
    let mut binary_labels = Vec::new();
    for (r, &label) in train.labels().iter().enumerate() {
        if let Some(rank) = o.rank_of(label) {
            if rank >= i {
                row_indices.push(r);
                binary_labels.push(usize::from(rank == i));
            }
        }
    }
    Ok(StageView {
        stage: i,
        row_indices,
        binary_labels,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeSource {
    #[default]
    MajorityOnly,
    AllOthers,
}

/// How the last stage draws its negatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LastStagePolicy {
    pub source: NegativeSource,
    pub negatives_per_positive: f64,
    pub seed: u64,
}

impl Default for LastStagePolicy {
    fn default() -> Self {
        Self {
            source: NegativeSource::MajorityOnly,
            negatives_per_positive: 1.0,
            seed: 0,
        }
    }
}

/// Stage `n - 1`: all rows of the rarest class plus negatives sampled
/// without replacement, `min(available, round(ratio * positives))` of them
/// (at least one).
pub fn last_stage_view(train: &Dataset, o: &ClassOrdering, p: &LastStagePolicy) -> Result<StageView> {
    if !(p.negatives_per_positive > 0.0 && p.negatives_per_positive.is_finite()) {
        return Err(Error::InvalidParams(
            "negatives_per_positive must be a positive number".to_string(),
        ));
    }
    let last = o.n() - 1;
    let mut positives = Vec::new();
    let mut source = Vec::new();
    for (r, &label) in train.labels().iter().enumerate() {
        let Some(rank) = o.rank_of(label) else { continue };
        if rank == last {
            positives.push(r);
        } else if rank == 0 || p.source == NegativeSource::AllOthers {
            source.push(r);
        }
    }
    if positives.is_empty() {
        return Err(Error::EmptyData);
    }
    if source.is_empty() {
        return Err(Error::PolicySourceEmpty);
    }
    let wanted = (p.negatives_per_positive * positives.len() as f64).round() as usize;
    let count = wanted.clamp(1, source.len());
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut negatives: Vec<usize> = rand::seq::index::sample(&mut rng, source.len(), count)
        .into_iter()
        .map(|k| source[k])
        .collect();
    negatives.sort_unstable();

    let mut rows: Vec<(usize, usize)> = positives
        .into_iter()
        .map(|r| (r, 1))
        .chain(negatives.into_iter().map(|r| (r, 0)))
        .collect();
    rows.sort_unstable();
    Ok(StageView {
        stage: last,
        row_indices: rows.iter().map(|r| r.0).collect(),
        binary_labels: rows.iter().map(|r| r.1).collect(),
    })
}

/// The training view of any stage.
pub fn stage_view(train: &Dataset, o: &ClassOrdering, i: usize, p: &LastStagePolicy) -> Result<StageView> {
    if i + 1 < o.n() {
        binarize_stage(train, o, i)
    } else if i + 1 == o.n() {
        last_stage_view(train, o, p)
    } else {
        Err(Error::StageOutOfRange { stage: i, n: o.n() })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageWeighting {
    #[default]
    None,
    /// Inverse frequency of each stage's positive/negative labels.
    PerStageInverseFrequency,
    /// Inverse frequency of the original multi-class labels.
    OriginalInverseFrequency,
}

impl StageWeighting {
    /// Weights for the rows of `view`.
    pub fn weights(self, train: &Dataset, view: &StageView) -> SampleWeights {
        match self {
            StageWeighting::None => SampleWeights::uniform(view.len()),
            StageWeighting::PerStageInverseFrequency => {
                compute_sample_weights(&view.binary_labels, WeightScheme::InverseFrequency)
            }
            StageWeighting::OriginalInverseFrequency => {
                compute_sample_weights(train.labels(), WeightScheme::InverseFrequency)
                    .select(&view.row_indices)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CascadeConfig {
    pub weighting: StageWeighting,
    pub last_stage: LastStagePolicy,
    /// Initial decision threshold of every stage.
    pub threshold: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            weighting: StageWeighting::None,
            last_stage: LastStagePolicy::default(),
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMeta {
    pub train_rows: usize,
    pub positives: usize,
    pub negatives: usize,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SbcRecord", into = "SbcRecord")]
pub struct SbcModel {
    ordering: ClassOrdering,
    stages: Vec<GbtModel>,
    thresholds: Vec<f64>,
    config: CascadeConfig,
    metadata: Vec<StageMeta>,
}

#[derive(Serialize, Deserialize)]
struct SbcRecord {
    format: String,
    version: u32,
    ordering: ClassOrdering,
    thresholds: Vec<f64>,
    config: CascadeConfig,
    metadata: Vec<StageMeta>,
    stages: Vec<GbtModel>,
}

impl From<SbcModel> for SbcRecord {
    fn from(m: SbcModel) -> Self {
        SbcRecord {
            format: "sbc-cascade".to_string(),
            version: FORMAT_VERSION,
            ordering: m.ordering,
            thresholds: m.thresholds,
            config: m.config,
            metadata: m.metadata,
            stages: m.stages,
        }
    }
}

impl TryFrom<SbcRecord> for SbcModel {
    type Error = String;

    fn try_from(r: SbcRecord) -> Result<Self, String> {
        if r.format != "sbc-cascade" {
            return Err(format!("unexpected format `{}`", r.format));
        }
        if r.version != FORMAT_VERSION {
            return Err(format!("unsupported version {}", r.version));
        }
        SbcModel::from_parts(r.ordering, r.stages, r.thresholds, r.config, r.metadata)
            .map_err(|e| e.to_string())
    }
}

/// Trains one stage on its view.
pub fn train_stage(
    train: &Dataset,
    view: &StageView,
    params: &GbtParams,
    weighting: StageWeighting,
) -> Result<(GbtModel, StageMeta)> {
    let x = view.features(train);
    let w = weighting.weights(train, view);
    let (model, seconds) = timed(|| GbtModel::train_binary(&x, &view.binary_labels, &w, params));
    let model = model.map_err(|e| e.at_stage(view.stage))?;
    let meta = StageMeta {
        train_rows: view.len(),
        positives: view.positives(),
        negatives: view.negatives(),
        train_seconds: seconds,
    };
    Ok((model, meta))
}

/// Trains every stage in rank order. `params` holds one entry per stage or a
/// single entry used for all of them.
pub fn train_cascade(
    train: &Dataset,
    o: &ClassOrdering,
    params: &[GbtParams],
    cfg: &CascadeConfig,
) -> Result<SbcModel> {
    let n = o.n();
    if params.len() != 1 && params.len() != n {
        return Err(Error::InvalidParams(format!(
            "expected 1 or {n} stage parameter sets, got {}",
            params.len()
        )));
    }
    let mut stages = Vec::with_capacity(n);
    let mut metadata = Vec::with_capacity(n);
    for i in 0..n {
        let view = stage_view(train, o, i, &cfg.last_stage).map_err(|e| e.at_stage(i))?;
        let p = if params.len() == 1 { &params[0] } else { &params[i] };
        let (model, meta) = train_stage(train, &view, p, cfg.weighting)?;
        stages.push(model);
        metadata.push(meta);
    }
    SbcModel::from_parts(o.clone(), stages, vec![cfg.threshold; n], *cfg, metadata)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "class")]
pub enum Outcome {
    Known(usize),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageEval {
    pub stage: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub outcome: Outcome,
    /// Every stage evaluated, in order.
    pub trace: Vec<StageEval>,
}

impl Prediction {
    pub fn class(&self) -> Option<usize> {
        match self.outcome {
            Outcome::Known(c) => Some(c),
            Outcome::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownAction {
    EmitUnknown,
    /// Report rejected rows as the rarest class so closed-set metrics apply.
    #[default]
    AssignLastClass,
}

impl SbcModel {
    pub fn from_parts(
        ordering: ClassOrdering,
        stages: Vec<GbtModel>,
        thresholds: Vec<f64>,
        config: CascadeConfig,
        metadata: Vec<StageMeta>,
    ) -> Result<Self> {
        let n = ordering.n();
        if stages.len() != n || thresholds.len() != n || metadata.len() != n {
            return Err(Error::Format(format!(
                "cascade over {n} classes needs {n} stages, thresholds and metadata entries"
            )));
        }
        if stages.iter().any(|s| s.objective() != Objective::BinaryLogistic) {
            return Err(Error::Format("cascade stages must be binary models".to_string()));
        }
        let n_features = stages[0].n_features();
        if stages.iter().any(|s| s.n_features() != n_features) {
            return Err(Error::Format("stages disagree on feature count".to_string()));
        }
        if thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::InvalidParams("stage thresholds must lie in (0, 1)".to_string()));
        }
        Ok(SbcModel {
            ordering,
            stages,
            thresholds,
            config,
            metadata,
        })
    }

    pub fn ordering(&self) -> &ClassOrdering {
        &self.ordering
    }

    pub fn stages(&self) -> &[GbtModel] {
        &self.stages
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn set_threshold(&mut self, stage: usize, threshold: f64) -> Result<()> {
        if stage >= self.stages.len() {
            return Err(Error::StageOutOfRange {
                stage,
                n: self.stages.len(),
            });
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidParams("stage thresholds must lie in (0, 1)".to_string()));
        }
        self.thresholds[stage] = threshold;
        Ok(())
    }

    pub fn config(&self) -> &CascadeConfig {
        &self.config
    }

    pub fn metadata(&self) -> &[StageMeta] {
        &self.metadata
    }

    pub fn n_features(&self) -> usize {
        self.stages[0].n_features()
    }

    /// Walks the stages until one accepts the row.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: row.len(),
            });
        }
        let mut trace = Vec::new();
        for (i, (stage, &t)) in self.stages.iter().zip(&self.thresholds).enumerate() {
            let probability = stage.positive_proba_row(row)?;
            trace.push(StageEval { stage: i, probability });
            if probability >= t {
                return Ok(Prediction {
                    outcome: Outcome::Known(self.ordering.class_at(i)),
                    trace,
                });
            }
        }
        Ok(Prediction {
            outcome: Outcome::Unknown,
            trace,
        })
    }

    pub fn predict_batch(&self, x: &Matrix, action: UnknownAction) -> Result<Vec<Prediction>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.n_cols(),
            });
        }
        let last = self.ordering.class_at(self.ordering.n() - 1);
        x.rows()
            .map(|row| {
                let mut p = self.predict(row)?;
                if action == UnknownAction::AssignLastClass && p.outcome == Outcome::Unknown {
                    p.outcome = Outcome::Known(last);
                }
                Ok(p)
            })
            .collect()
    }
}
