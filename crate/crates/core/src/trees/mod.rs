//! Decision-tree induction over numeric features.
//!
//! Three learners share one grower:
//! - a C4.5-style tree: gain ratio with pessimistic error pruning,
//! - a reduced-error-pruned tree: information gain with a stratified holdout,
//! - a random forest of unpruned trees with per-node feature sampling.
//!
//! Splits are binary (`value <= threshold` goes left) at midpoints between
//! consecutive observed values. Every tie, whether between split scores, leaf
//! votes or forest votes, resolves toward the smaller feature index, lower
//! threshold or lower rating.

mod forest;
mod prune;
mod split;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use forest::{train_forest, ForestParams};
pub use prune::{add_errors, prune_pessimistic, prune_reduced_error};
pub use split::{best_split, entropy, SplitCandidate, SplitCriterion, TIE_EPS};

use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::label::ClassLabel;
use crate::model::Prediction;
use crate::rng::{Purpose, RngSeed};

/// Dense numeric training matrix with class-index labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    n_features: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
    classes: Vec<ClassLabel>,
}

impl TrainSet {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, classes: Vec<ClassLabel>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidParam("row and label counts differ".into()));
        }
        if classes.is_empty() {
            return Err(Error::InvalidParam("class list is empty".into()));
        }
        let n_features = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for row in &rows {
            if row.len() != n_features {
                return Err(Error::Arity {
                    expected: n_features,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParam("feature values must be finite".into()));
            }
            values.extend_from_slice(row);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::InvalidParam(format!("label index {bad} out of range")));
        }
        Ok(TrainSet {
            n_features,
            values,
            labels,
            classes,
        })
    }

    /// Training matrix over the dataset's own class set.
    pub fn from_dataset(dataset: &Dataset) -> Result<Self> {
        Self::from_dataset_with_classes(dataset, &dataset.class_set)
    }

    /// Training matrix indexed against an explicit (superset) class list.
    pub fn from_dataset_with_classes(dataset: &Dataset, classes: &[ClassLabel]) -> Result<Self> {
        let labels = dataset
            .rows
            .iter()
            .map(|r| {
                classes
                    .binary_search(&r.label)
                    .map_err(|_| Error::InvalidParam(format!("label {} not in class list", r.label)))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = dataset.rows.iter().map(|r| r.values.to_vec()).collect();
        let mut set = TrainSet::new(rows, labels, classes.to_vec())?;
        set.n_features = crate::features::N_FEATURES;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features + feature]
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// A weighted multiset of training rows. Bootstrap draws repeat rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub rows: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Sample {
    /// Every row once with weight 1.
    pub fn uniform(n: usize) -> Self {
        Sample {
            rows: (0..n).collect(),
            weights: vec![1.0; n],
        }
    }

    pub fn unit(rows: Vec<usize>) -> Self {
        let weights = vec![1.0; rows.len()];
        Sample { rows, weights }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Pruning {
    None,
    /// C4.5 error-based subtree replacement.
    Pessimistic {
        confidence: f64,
    },
    /// Prune against a seeded stratified holdout carved from the training rows.
    ReducedError {
        holdout_fraction: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: SplitCriterion,
    /// Minimum weight on each side of a split.
    pub min_leaf: f64,
    pub max_depth: Option<usize>,
    pub pruning: Pruning,
}

impl TreeParams {
    /// Gain ratio, two rows per leaf, pessimistic pruning at CF 0.25.
    pub fn j48() -> Self {
        TreeParams {
            criterion: SplitCriterion::GainRatio,
            min_leaf: 2.0,
            max_depth: None,
            pruning: Pruning::Pessimistic { confidence: 0.25 },
        }
    }

    /// Information gain, two rows per leaf, reduced-error pruning on a third.
    pub fn reptree() -> Self {
        TreeParams {
            criterion: SplitCriterion::InfoGain,
            min_leaf: 2.0,
            max_depth: None,
            pruning: Pruning::ReducedError {
                holdout_fraction: 1.0 / 3.0,
            },
        }
    }

    /// Fully grown information-gain tree, as used inside forests.
    pub fn unpruned() -> Self {
        TreeParams {
            criterion: SplitCriterion::InfoGain,
            min_leaf: 1.0,
            max_depth: None,
            pruning: Pruning::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_leaf.is_finite() && self.min_leaf >= 0.0) {
            return Err(Error::InvalidParam("min_leaf must be non-negative".into()));
        }
        match self.pruning {
            Pruning::Pessimistic { confidence } if !(confidence > 0.0 && confidence < 0.5) => {
                Err(Error::InvalidParam(format!("confidence {confidence} outside (0, 0.5)")))
            }
            Pruning::ReducedError { holdout_fraction } if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) => Err(
                Error::InvalidParam(format!("holdout fraction {holdout_fraction} outside (0, 1)")),
            ),
            _ => Ok(()),
        }
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        Self::j48()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Training weight per class that reached this node.
        class_counts: Vec<f64>,
        left: usize,
        right: usize,
    },
    Leaf {
        class_counts: Vec<f64>,
        predicted: usize,
    },
}

impl TreeNode {
    pub fn class_counts(&self) -> &[f64] {
        match self {
            TreeNode::Split { class_counts, .. } | TreeNode::Leaf { class_counts, .. } => class_counts,
        }
    }

    fn leaf(class_counts: Vec<f64>) -> Self {
        let predicted = argmax(&class_counts);
        TreeNode::Leaf {
            class_counts,
            predicted,
        }
    }
}

/// Index of the largest entry; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A trained tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub n_features: usize,
    pub classes: Vec<ClassLabel>,
    pub params: TreeParams,
    pub seed: RngSeed,
    nodes: Vec<TreeNode>,
}

impl TreeModel {
    /// Builds a model from an explicit arena. Children must point to valid
    /// nodes reachable only once from the root.
    pub fn from_nodes(n_features: usize, classes: Vec<ClassLabel>, nodes: Vec<TreeNode>) -> Result<Self> {
        let model = TreeModel {
            n_features,
            classes,
            params: TreeParams::unpruned(),
            seed: RngSeed(0),
            nodes,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidParam("tree has no nodes".into()));
        }
        let k = self.classes.len();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParam(format!("malformed tree at node {i}")));
            }
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    class_counts,
                    left,
                    right,
                } => {
                    if *feature >= self.n_features || !threshold.is_finite() || class_counts.len() != k {
                        return Err(Error::InvalidParam(format!("malformed split at node {i}")));
                    }
                    stack.push(*right);
                    stack.push(*left);
                }
                TreeNode::Leaf {
                    class_counts,
                    predicted,
                } => {
                    if class_counts.len() != k || *predicted >= k {
                        return Err(Error::InvalidParam(format!("malformed leaf at node {i}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Index of the leaf `x` is routed to.
    pub fn leaf_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::Arity {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { .. } => return Ok(i),
            }
        }
    }

    /// Predicted class index only; avoids building the distribution.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        match &self.nodes[self.leaf_index(x)?] {
            TreeNode::Leaf { predicted, .. } => Ok(*predicted),
            TreeNode::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let leaf = &self.nodes[self.leaf_index(x)?];
        let TreeNode::Leaf {
            class_counts,
            predicted,
        } = leaf
        else {
            unreachable!("leaf_index returns leaves")
        };
        let total: f64 = class_counts.iter().sum();
        let distribution = if total > 0.0 {
            class_counts.iter().map(|c| c / total).collect()
        } else {
            let mut d = vec![0.0; class_counts.len()];
            d[*predicted] = 1.0;
            d
        };
        Ok(Prediction {
            class_index: *predicted,
            label: self.classes[*predicted],
            distribution,
        })
    }

    /// Drops nodes no longer reachable from the root, renumbering in
    /// depth-first order.
    fn compact(&mut self) {
        let mut order = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            order.push(i);
            if let TreeNode::Split { left, right, .. } = self.nodes[i] {
                stack.push(right);
                stack.push(left);
            }
        }
        let mut new_index = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let mut nodes: Vec<TreeNode> = order.iter().map(|&i| self.nodes[i].clone()).collect();
        for node in &mut nodes {
            if let TreeNode::Split { left, right, .. } = node {
                *left = new_index[*left];
                *right = new_index[*right];
            }
        }
        self.nodes = nodes;
    }
}

/// Per-node random feature subset, used by forests.
pub(crate) struct FeatureSampler {
    pub per_split: usize,
    pub rng: ChaCha8Rng,
}

fn class_weights(data: &TrainSet, sample: &Sample, members: &[usize]) -> Vec<f64> {
    let mut counts = vec![0.0; data.n_classes()];
    for &m in members {
        counts[data.label(sample.rows[m])] += sample.weights[m];
    }
    counts
}

/// Higher key wins; near-ties go to the smaller feature index.
fn prefer(c: &SplitCandidate, best: Option<&SplitCandidate>, key: impl Fn(&SplitCandidate) -> f64) -> bool {
    match best {
        None => true,
        Some(b) => key(c) > key(b) + TIE_EPS || (key(c) >= key(b) - TIE_EPS && c.feature < b.feature),
    }
}

/// Greedy top-down induction without pruning.
pub(crate) fn grow(
    data: &TrainSet,
    sample: &Sample,
    params: &TreeParams,
    mut sampler: Option<FeatureSampler>,
) -> Vec<TreeNode> {
    let n_features = data.n_features();
    let mut nodes: Vec<Option<TreeNode>> = vec![None];
    // (slot, member positions into `sample`, depth)
    let mut work = vec![(0usize, (0..sample.len()).collect::<Vec<_>>(), 0usize)];
    while let Some((slot, members, depth)) = work.pop() {
        let counts = class_weights(data, sample, &members);
        let total: f64 = counts.iter().sum();
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || total < 2.0 * params.min_leaf || members.len() < 2 {
            nodes[slot] = Some(TreeNode::leaf(counts));
            continue;
        }
        // Forests look at `per_split` random features first and keep drawing
        // more only while none of them offers a positive gain.
        let (features, minimum) = match sampler.as_mut() {
            Some(s) if s.per_split < n_features => {
                let mut order: Vec<usize> = (0..n_features).collect();
                order.shuffle(&mut s.rng);
                (order, s.per_split)
            }
            _ => ((0..n_features).collect(), n_features),
        };
        let mut best: Option<SplitCandidate> = None;
        let mut fallback: Option<SplitCandidate> = None;
        for (seen, f) in features.into_iter().enumerate() {
            if seen >= minimum && best.is_some() {
                break;
            }
            let Some(c) = split::search_feature(data, sample, &members, f, params.criterion, params.min_leaf) else {
                continue;
            };
            if c.gain <= TIE_EPS {
                if prefer(&c, fallback.as_ref(), |c| c.gain) {
                    fallback = Some(c);
                }
            } else if prefer(&c, best.as_ref(), |c| c.score) {
                best = Some(c);
            }
        }
        // Fully grown trees still split impure nodes that no single threshold
        // improves (XOR-like layouts), so consistent data is always fit.
        if best.is_none() && params.pruning == Pruning::None {
            best = fallback;
        }
        let Some(best) = best else {
            nodes[slot] = Some(TreeNode::leaf(counts));
            continue;
        };
        let (left_members, right_members): (Vec<usize>, Vec<usize>) = members
            .iter()
            .partition(|&&m| data.value(sample.rows[m], best.feature) <= best.threshold);
        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(None);
        nodes.push(None);
        nodes[slot] = Some(TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            class_counts: counts,
            left,
            right,
        });
        work.push((right, right_members, depth + 1));
        work.push((left, left_members, depth + 1));
    }
    nodes.into_iter().map(|n| n.expect("every slot filled")).collect()
}

/// Splits sample positions into (grow, holdout) per class, holding out
/// `floor(class_size * fraction)` positions of each class.
pub(crate) fn stratified_holdout(data: &TrainSet, sample: &Sample, fraction: f64, seed: RngSeed) -> (Sample, Sample) {
    let mut rng = seed.rng(Purpose::Holdout, 0);
    let mut grow = Sample {
        rows: vec![],
        weights: vec![],
    };
    let mut holdout = Sample {
        rows: vec![],
        weights: vec![],
    };
    for class in 0..data.n_classes() {
        let mut positions: Vec<usize> = (0..sample.len())
            .filter(|&m| data.label(sample.rows[m]) == class)
            .collect();
        positions.shuffle(&mut rng);
        let n_hold = (positions.len() as f64 * fraction).floor() as usize;
        for (i, &m) in positions.iter().enumerate() {
            let target = if i < n_hold { &mut holdout } else { &mut grow };
            target.rows.push(sample.rows[m]);
            target.weights.push(sample.weights[m]);
        }
    }
    (grow, holdout)
}

pub(crate) fn train_tree_with(
    data: &TrainSet,
    sample: &Sample,
    params: &TreeParams,
    seed: RngSeed,
    sampler: Option<FeatureSampler>,
) -> Result<TreeModel> {
    params.validate()?;
    if sample.is_empty() || data.is_empty() {
        return Err(Error::Empty("cannot train a tree on an empty dataset"));
    }
    let mut model = TreeModel {
        n_features: data.n_features(),
        classes: data.classes().to_vec(),
        params: *params,
        seed,
        nodes: Vec::new(),
    };
    match params.pruning {
        Pruning::None => model.nodes = grow(data, sample, params, sampler),
        Pruning::Pessimistic { confidence } => {
            model.nodes = grow(data, sample, params, sampler);
            prune_pessimistic(&mut model, confidence);
        }
        Pruning::ReducedError { holdout_fraction } => {
            let (grow_set, holdout) = stratified_holdout(data, sample, holdout_fraction, seed);
            model.nodes = grow(data, &grow_set, params, sampler);
            prune_reduced_error(&mut model, data, &holdout);
        }
    }
    Ok(model)
}

/// Trains one tree on a weighted sample of `data`.
pub fn train_tree(data: &TrainSet, sample: &Sample, params: &TreeParams, seed: RngSeed) -> Result<TreeModel> {
    train_tree_with(data, sample, params, seed, None)
}
