//! Gradient-boosted decision trees with second-order (Newton) leaf weights.
//!
//! Two heads are supported: binary logistic (one tree per round, used for
//! every cascade stage) and multiclass softmax (`K` trees per round, the
//! multi-class baseline). Splits are found by exact greedy search over
//! feature values pre-sorted once per training run; trees grow level by
//! level so each level is a single pass over each sorted column.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleWeights;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Splits whose gain does not exceed this are not taken.
const MIN_SPLIT_GAIN: f64 = 1e-9;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub num_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum hessian sum in each child of a split.
    pub min_child_weight: f64,
    pub l2_lambda: f64,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            num_rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            min_child_weight: 1.0,
            l2_lambda: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.num_rounds == 0 {
            return bad("num_rounds must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return bad("min_child_weight must be a nonnegative number");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be a nonnegative number");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    BinaryLogistic,
    MulticlassSoftmax,
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Weighted logistic loss `w * (log(1 + e^s) - y s)` of a raw score.
pub fn logistic_loss(score: f64, y: f64, w: f64) -> f64 {
    let softplus = score.max(0.0) + (-score.abs()).exp().ln_1p();
    w * (softplus - y * score)
}

/// Gradient and hessian of [`logistic_loss`] with respect to the score.
pub fn logistic_grad_hess(score: f64, y: f64, w: f64) -> (f64, f64) {
    let p = sigmoid(score);
    (w * (p - y), w * p * (1.0 - p))
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Weighted cross-entropy of softmax scores against class `y`.
pub fn softmax_loss(scores: &[f64], y: usize, w: f64) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    w * (lse - scores[y])
}

/// Per-coordinate `(g_k, h_k) = (w (p_k - [y = k]), w p_k (1 - p_k))`.
pub fn softmax_grad_hess(scores: &[f64], y: usize, w: f64) -> Vec<(f64, f64)> {
    softmax(scores)
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let t = if k == y { 1.0 } else { 0.0 };
            (w * (p - t), w * p * (1.0 - p))
        })
        .collect()
}

/// Newton leaf weight `-G / (H + lambda)`, zero when the denominator vanishes.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        -g / denom
    } else {
        0.0
    }
}

fn score_term(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

/// Second-order loss reduction of splitting `(gl + gr, hl + hr)` in two.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    0.5 * (score_term(gl, hl, lambda) + score_term(gr, hr, lambda)
        - score_term(gl + gr, hl + hr, lambda))
}

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left; NaN follows `default_left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        default_left: bool,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeArrays", into = "TreeArrays")]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    default_left,
                } => {
                    let v = x[feature];
                    let go_left = if v.is_nan() { default_left } else { v < threshold };
                    i = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Flattened, explicitly indexed form used for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeArrays {
    node_id: Vec<usize>,
    is_leaf: Vec<bool>,
    feature: Vec<usize>,
    threshold: Vec<f64>,
    left: Vec<usize>,
    right: Vec<usize>,
    default_left: Vec<bool>,
    value: Vec<f64>,
}

impl From<Tree> for TreeArrays {
    fn from(t: Tree) -> Self {
        let n = t.nodes.len();
        let mut a = TreeArrays {
            node_id: (0..n).collect(),
            is_leaf: Vec::with_capacity(n),
            feature: Vec::with_capacity(n),
            threshold: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            right: Vec::with_capacity(n),
            default_left: Vec::with_capacity(n),
            value: Vec::with_capacity(n),
        };
        for node in t.nodes {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    default_left,
                } => {
                    a.is_leaf.push(false);
                    a.feature.push(feature);
                    a.threshold.push(threshold);
                    a.left.push(left);
                    a.right.push(right);
                    a.default_left.push(default_left);
                    a.value.push(0.0);
                }
                Node::Leaf { value } => {
                    a.is_leaf.push(true);
                    a.feature.push(0);
                    a.threshold.push(0.0);
                    a.left.push(0);
                    a.right.push(0);
                    a.default_left.push(false);
                    a.value.push(value);
                }
            }
        }
        a
    }
}

impl TryFrom<TreeArrays> for Tree {
    type Error = String;

    fn try_from(a: TreeArrays) -> Result<Self, String> {
        let n = a.node_id.len();
        let lens = [
            a.is_leaf.len(),
            a.feature.len(),
            a.threshold.len(),
            a.left.len(),
            a.right.len(),
            a.default_left.len(),
            a.value.len(),
        ];
        if n == 0 || lens.iter().any(|&l| l != n) {
            return Err("tree arrays are empty or of unequal length".to_string());
        }
        let mut nodes = vec![Node::Leaf { value: 0.0 }; n];
        for k in 0..n {
            let id = a.node_id[k];
            if id >= n {
                return Err(format!("node id {id} out of range"));
            }
            nodes[id] = if a.is_leaf[k] {
                Node::Leaf { value: a.value[k] }
            } else {
                // Children always follow their parent, which rules out cycles.
                if a.left[k] <= id || a.right[k] <= id || a.left[k] >= n || a.right[k] >= n {
                    return Err(format!("node {id} has invalid children"));
                }
                if !a.threshold[k].is_finite() {
                    return Err(format!("node {id} has a non-finite threshold"));
                }
                Node::Split {
                    feature: a.feature[k],
                    threshold: a.threshold[k],
                    left: a.left[k],
                    right: a.right[k],
                    default_left: a.default_left[k],
                }
            };
        }
        Ok(Tree { nodes })
    }
}

// ---------------------------------------------------------------------------
// Tree growing
// ---------------------------------------------------------------------------

/// Per-feature row orders, computed once per training run.
struct Presorted {
    order: Vec<Vec<usize>>,
    missing: Vec<Vec<usize>>,
}

impl Presorted {
    fn new(x: &Matrix) -> Self {
        let mut order = Vec::with_capacity(x.n_cols());
        let mut missing = Vec::with_capacity(x.n_cols());
        for f in 0..x.n_cols() {
            let (mut present, absent): (Vec<usize>, Vec<usize>) =
                (0..x.n_rows()).partition(|&r| !x.get(r, f).is_nan());
            present.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            order.push(present);
            missing.push(absent);
        }
        Presorted { order, missing }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    default_left: bool,
    gl: f64,
    hl: f64,
}

/// A threshold strictly above `lo` and at most `hi`, so `lo` goes left and
/// `hi` goes right under the `<` rule.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

const NO_NODE: usize = usize::MAX;

struct Grower<'a> {
    x: &'a Matrix,
    sorted: &'a Presorted,
    params: &'a GbtParams,
}

impl Grower<'_> {
    /// Grows one tree on the rows in `sample`. Leaf values include the
    /// learning-rate shrinkage.
    fn grow(&self, grad: &[f64], hess: &[f64], sample: &[usize]) -> Tree {
        let p = self.params;
        let lambda = p.l2_lambda;
        let mut pos = vec![NO_NODE; self.x.n_rows()];
        let (mut g0, mut h0) = (0.0, 0.0);
        for &r in sample {
            pos[r] = 0;
            g0 += grad[r];
            h0 += hess[r];
        }
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut stats = vec![(g0, h0)];
        let mut frontier = vec![0usize];
        let mut depth = 0;

        while !frontier.is_empty() && depth < p.max_depth {
            let mut slot = vec![NO_NODE; nodes.len()];
            for (s, &node) in frontier.iter().enumerate() {
                slot[node] = s;
            }
            let slot_of = |r: usize| {
                let node = pos[r];
                if node == NO_NODE {
                    NO_NODE
                } else {
                    slot[node]
                }
            };
            let m = frontier.len();
            let mut best: Vec<Option<Candidate>> = vec![None; m];
            let mut miss = vec![(0.0f64, 0.0f64); m];
            let mut acc = vec![(0.0f64, 0.0f64); m];
            let mut last: Vec<Option<f64>> = vec![None; m];

            for f in 0..self.x.n_cols() {
                miss.iter_mut().for_each(|v| *v = (0.0, 0.0));
                acc.iter_mut().for_each(|v| *v = (0.0, 0.0));
                last.iter_mut().for_each(|v| *v = None);
                for &r in &self.sorted.missing[f] {
                    let s = slot_of(r);
                    if s != NO_NODE {
                        miss[s].0 += grad[r];
                        miss[s].1 += hess[r];
                    }
                }
                for &r in &self.sorted.order[f] {
                    let s = slot_of(r);
                    if s == NO_NODE {
                        continue;
                    }
                    let v = self.x.get(r, f);
                    if let Some(lo) = last[s] {
                        if v > lo {
                            let (gt, ht) = stats[frontier[s]];
                            let has_missing = miss[s].1 != 0.0 || miss[s].0 != 0.0;
                            for default_left in [false, true] {
                                if default_left && !has_missing {
                                    break;
                                }
                                let (gl, hl) = if default_left {
                                    (acc[s].0 + miss[s].0, acc[s].1 + miss[s].1)
                                } else {
                                    acc[s]
                                };
                                let (gr, hr) = (gt - gl, ht - hl);
                                if hl < p.min_child_weight || hr < p.min_child_weight {
                                    continue;
                                }
                                let gain = split_gain(gl, hl, gr, hr, lambda);
                                let better = match &best[s] {
                                    None => gain > MIN_SPLIT_GAIN,
                                    Some(b) => gain > b.gain,
                                };
                                if better {
                                    best[s] = Some(Candidate {
                                        gain,
                                        feature: f,
                                        threshold: midpoint(lo, v),
                                        default_left,
                                        gl,
                                        hl,
                                    });
                                }
                            }
                        }
                    }
                    acc[s].0 += grad[r];
                    acc[s].1 += hess[r];
                    last[s] = Some(v);
                }
            }

            let mut next = Vec::new();
            for (s, cand) in best.into_iter().enumerate() {
                let Some(c) = cand else { continue };
                let node = frontier[s];
                let (gt, ht) = stats[node];
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                stats.push((c.gl, c.hl));
                stats.push((gt - c.gl, ht - c.hl));
                nodes[node] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                    default_left: c.default_left,
                };
                next.push(left);
                next.push(right);
            }
            if next.is_empty() {
                break;
            }
            for &r in sample {
                if let Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    default_left,
                } = nodes[pos[r]]
                {
                    let v = self.x.get(r, feature);
                    let go_left = if v.is_nan() { default_left } else { v < threshold };
                    pos[r] = if go_left { left } else { right };
                }
            }
            frontier = next;
            depth += 1;
        }

        for (node, &(g, h)) in nodes.iter_mut().zip(&stats) {
            if let Node::Leaf { value } = node {
                *value = p.learning_rate * leaf_weight(g, h, lambda);
            }
        }
        Tree { nodes }
    }
}

fn round_sample(params: &GbtParams, n: usize, round: usize) -> Vec<usize> {
    if params.subsample >= 1.0 {
        return (0..n).collect();
    }
    let count = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(round as u64));
    let mut rows = rand::seq::index::sample(&mut rng, n, count).into_vec();
    rows.sort_unstable();
    rows
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GbtModelRecord", into = "GbtModelRecord")]
pub struct GbtModel {
    objective: Objective,
    n_classes: usize,
    n_features: usize,
    base_score: Vec<f64>,
    /// `trees[round][group]`.
    trees: Vec<Vec<Tree>>,
    params: GbtParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GbtModelRecord {
    format: String,
    version: u32,
    objective: Objective,
    n_classes: usize,
    n_features: usize,
    base_score: Vec<f64>,
    params: GbtParams,
    trees: Vec<Vec<Tree>>,
}

impl From<GbtModel> for GbtModelRecord {
    fn from(m: GbtModel) -> Self {
        GbtModelRecord {
            format: "sbc-gbt".to_string(),
            version: FORMAT_VERSION,
            objective: m.objective,
            n_classes: m.n_classes,
            n_features: m.n_features,
            base_score: m.base_score,
            params: m.params,
            trees: m.trees,
        }
    }
}

impl TryFrom<GbtModelRecord> for GbtModel {
    type Error = String;

    fn try_from(r: GbtModelRecord) -> Result<Self, String> {
        if r.format != "sbc-gbt" {
            return Err(format!("unexpected format `{}`", r.format));
        }
        if r.version != FORMAT_VERSION {
            return Err(format!("unsupported version {}", r.version));
        }
        let groups = match r.objective {
            Objective::BinaryLogistic => 1,
            Objective::MulticlassSoftmax => r.n_classes,
        };
        if r.base_score.len() != groups || r.trees.iter().any(|t| t.len() != groups) {
            return Err("tree groups do not match the objective".to_string());
        }
        for tree in r.trees.iter().flatten() {
            for node in tree.nodes() {
                if let Node::Split { feature, .. } = node {
                    if *feature >= r.n_features {
                        return Err(format!("split on feature {feature} out of range"));
                    }
                }
            }
        }
        Ok(GbtModel {
            objective: r.objective,
            n_classes: r.n_classes,
            n_features: r.n_features,
            base_score: r.base_score,
            trees: r.trees,
            params: r.params,
        })
    }
}

/// Predicted probabilities for a batch.
#[derive(Debug, Clone, PartialEq)]
pub enum Proba {
    /// Positive-class probability per row.
    Binary(Vec<f64>),
    /// One probability vector per row.
    Multiclass(Vec<Vec<f64>>),
}

fn check_inputs(x: &Matrix, n_labels: usize, w: &SampleWeights) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    if n_labels != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            actual: n_labels,
        });
    }
    if w.len() != x.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            actual: w.len(),
        });
    }
    Ok(())
}

impl GbtModel {
    /// Trains a binary-logistic model. Labels must be 0 or 1 with both present.
    pub fn train_binary(x: &Matrix, y: &[usize], w: &SampleWeights, p: &GbtParams) -> Result<Self> {
        p.validate()?;
        check_inputs(x, y.len(), w)?;
        if let Some(&bad) = y.iter().find(|&&l| l > 1) {
            return Err(Error::LabelOutOfRange { label: bad, n: 2 });
        }
        let w = w.as_slice();
        let (mut pos_w, mut neg_w) = (0.0, 0.0);
        for (&yi, &wi) in y.iter().zip(w) {
            if yi == 1 {
                pos_w += wi;
            } else {
                neg_w += wi;
            }
        }
        if pos_w == 0.0 || neg_w == 0.0 {
            return Err(Error::SingleClassInput);
        }
        let base = (pos_w / neg_w).ln();
        let n = x.n_rows();
        let sorted = Presorted::new(x);
        let grower = Grower { x, sorted: &sorted, params: p };

        let mut scores = vec![base; n];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut trees = Vec::with_capacity(p.num_rounds);
        for round in 0..p.num_rounds {
            for r in 0..n {
                let (g, h) = logistic_grad_hess(scores[r], y[r] as f64, w[r]);
                grad[r] = g;
                hess[r] = h;
            }
            let sample = round_sample(p, n, round);
            let tree = grower.grow(&grad, &hess, &sample);
            for (r, s) in scores.iter_mut().enumerate() {
                *s += tree.predict_row(x.row(r));
            }
            trees.push(vec![tree]);
        }
        Ok(GbtModel {
            objective: Objective::BinaryLogistic,
            n_classes: 2,
            n_features: x.n_cols(),
            base_score: vec![base],
            trees,
            params: *p,
        })
    }

    /// Trains a softmax model over `n_classes` classes (labels `0..n_classes`).
    /// `n_classes` may exceed the largest label seen; at least two distinct
    /// labels must be present.
    pub fn train_multiclass(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        w: &SampleWeights,
        p: &GbtParams,
    ) -> Result<Self> {
        p.validate()?;
        check_inputs(x, y.len(), w)?;
        if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                n: n_classes,
            });
        }
        if y.iter().all(|&l| l == y[0]) {
            return Err(Error::SingleClassInput);
        }
        let w = w.as_slice();
        let n = x.n_rows();
        let k = n_classes;
        let sorted = Presorted::new(x);
        let grower = Grower { x, sorted: &sorted, params: p };

        let mut scores = vec![vec![0.0; k]; n];
        let mut grad = vec![vec![0.0; n]; k];
        let mut hess = vec![vec![0.0; n]; k];
        let mut trees = Vec::with_capacity(p.num_rounds);
        for round in 0..p.num_rounds {
            for r in 0..n {
                for (c, (g, h)) in softmax_grad_hess(&scores[r], y[r], w[r]).into_iter().enumerate() {
                    grad[c][r] = g;
                    hess[c][r] = h;
                }
            }
            let sample = round_sample(p, n, round);
            let group: Vec<Tree> = (0..k)
                .map(|c| grower.grow(&grad[c], &hess[c], &sample))
                .collect();
            for (r, s) in scores.iter_mut().enumerate() {
                for (c, tree) in group.iter().enumerate() {
                    s[c] += tree.predict_row(x.row(r));
                }
            }
            trees.push(group);
        }
        Ok(GbtModel {
            objective: Objective::MulticlassSoftmax,
            n_classes: k,
            n_features: x.n_cols(),
            base_score: vec![0.0; k],
            trees,
            params: *p,
        })
    }

    /// A model without trees; predictions come from `base_score` alone.
    pub fn constant(objective: Objective, n_features: usize, base_score: Vec<f64>) -> Self {
        let n_classes = match objective {
            Objective::BinaryLogistic => 2,
            Objective::MulticlassSoftmax => base_score.len(),
        };
        GbtModel {
            objective,
            n_classes,
            n_features,
            base_score,
            trees: Vec::new(),
            params: GbtParams::default(),
        }
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn base_score(&self) -> &[f64] {
        &self.base_score
    }

    pub fn trees(&self) -> &[Vec<Tree>] {
        &self.trees
    }

    pub fn params(&self) -> &GbtParams {
        &self.params
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: row.len(),
            });
        }
        Ok(())
    }

    /// Raw (pre-link) scores of one row using the first `rounds` rounds.
    pub fn raw_scores_row_upto(&self, row: &[f64], rounds: usize) -> Vec<f64> {
        let mut s = self.base_score.clone();
        for group in self.trees.iter().take(rounds) {
            for (acc, tree) in s.iter_mut().zip(group) {
                *acc += tree.predict_row(row);
            }
        }
        s
    }

    pub fn raw_scores_row(&self, row: &[f64]) -> Vec<f64> {
        self.raw_scores_row_upto(row, self.trees.len())
    }

    fn link(&self, raw: Vec<f64>) -> Vec<f64> {
        match self.objective {
            Objective::BinaryLogistic => {
                // Keep probabilities strictly inside (0, 1).
                let p = sigmoid(raw[0]).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                vec![p]
            }
            Objective::MulticlassSoftmax => softmax(&raw),
        }
    }

    /// `[p_positive]` for binary models, the class distribution for softmax.
    pub fn predict_proba_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        Ok(self.link(self.raw_scores_row(row)))
    }

    /// Positive-class probability of a binary model.
    pub fn positive_proba_row(&self, row: &[f64]) -> Result<f64> {
        if self.objective != Objective::BinaryLogistic {
            return Err(Error::InvalidParams(
                "positive-class probability requires a binary model".to_string(),
            ));
        }
        Ok(self.predict_proba_row(row)?[0])
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Proba> {
        if x.n_cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.n_cols(),
            });
        }
        let rows = x.rows().map(|r| self.link(self.raw_scores_row(r)));
        Ok(match self.objective {
            Objective::BinaryLogistic => Proba::Binary(rows.map(|p| p[0]).collect()),
            Objective::MulticlassSoftmax => Proba::Multiclass(rows.collect()),
        })
    }

    /// Binary: 1 iff probability >= `threshold`. Softmax: argmax, ties to the
    /// lower class id; `threshold` is ignored.
    pub fn predict_class(&self, x: &Matrix, threshold: f64) -> Result<Vec<usize>> {
        if self.objective == Objective::BinaryLogistic && !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidParams(format!(
                "threshold {threshold} must lie in (0, 1)"
            )));
        }
        Ok(match self.predict_proba(x)? {
            Proba::Binary(p) => p.into_iter().map(|p| usize::from(p >= threshold)).collect(),
            Proba::Multiclass(p) => p.iter().map(|row| argmax(row)).collect(),
        })
    }
}

/// Index of the largest value; the first one on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
