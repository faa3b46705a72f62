//! Binary decision-tree ensembles with two split regimes: standard random
//! thresholds, and the joint-maximum-purity mode where every threshold is
//! the inherent zero-center hyperplane of the rotated feature space.
//! Leaves hold class histograms, target means, or ridge projections.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::numerics::{self, Matrix};
use crate::{Error, Result};

const GAUSS_EPS: f64 = 1e-9;
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Standard,
    Jmpf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification,
    Regression,
    RidgeLeaves,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impurity {
    Entropy,
    VarianceSum,
    GaussianEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub num_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// #H: candidate feature dimensions examined per split.
    pub num_candidate_dims: usize,
    /// Uniform threshold draws per candidate dimension (Standard mode only).
    pub num_candidate_thresholds: usize,
    pub mode: SplitMode,
    pub task: Task,
    /// Ridge-leaf regularization.
    pub lambda: f64,
    pub impurity: Impurity,
    pub seed: u64,
}

impl ForestConfig {
    pub fn classification(num_trees: usize, mode: SplitMode, seed: u64) -> Self {
        Self {
            num_trees,
            max_depth: 15,
            min_samples_split: 5,
            num_candidate_dims: 1,
            num_candidate_thresholds: 10,
            mode,
            task: Task::Classification,
            lambda: 0.0,
            impurity: Impurity::Entropy,
            seed,
        }
    }

    pub fn regression(num_trees: usize, mode: SplitMode, seed: u64) -> Self {
        Self {
            task: Task::Regression,
            impurity: Impurity::VarianceSum,
            ..Self::classification(num_trees, mode, seed)
        }
    }

    pub fn ridge_leaves(num_trees: usize, lambda: f64, seed: u64) -> Self {
        Self {
            task: Task::RidgeLeaves,
            impurity: Impurity::VarianceSum,
            mode: SplitMode::Jmpf,
            lambda,
            ..Self::classification(num_trees, SplitMode::Jmpf, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_trees < 1
            || self.max_depth < 1
            || self.min_samples_split < 2
            || self.num_candidate_dims < 1
        {
            return Err(Error::OutOfRange(
                "forest config: T >= 1, depth >= 1, min_samples_split >= 2, #H >= 1".into(),
            ));
        }
        if self.task == Task::RidgeLeaves && self.lambda <= 0.0 {
            return Err(Error::OutOfRange(
                "ridge-leaf task requires lambda > 0".into(),
            ));
        }
        if self.mode == SplitMode::Standard && self.num_candidate_thresholds < 1 {
            return Err(Error::OutOfRange(
                "standard mode requires num_candidate_thresholds >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Training targets: dense class indices or a row-per-sample value matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, num_classes: usize },
    Values(Matrix),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeafModel {
    /// Class probabilities, summing to 1.
    Histogram(Vec<f64>),
    /// Mean target vector.
    Mean(Vec<f64>),
    /// Ridge projection (q x d) plus the number of samples that fitted it.
    Ridge { p: Matrix, samples: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        dim: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(LeafModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Route a sample to its leaf: `v[dim] < threshold` goes left.
    pub fn route<'a>(&'a self, v: &[f64]) -> &'a LeafModel {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf(leaf) => return leaf,
                Node::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    at = if v[*dim] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub config: ForestConfig,
    pub trees: Vec<Tree>,
    pub feature_dim: usize,
    /// K for classification forests, 0 otherwise.
    pub num_classes: usize,
    /// q for regression / ridge forests, 0 otherwise.
    pub target_dim: usize,
}

/// Shannon entropy in nats of a class-count vector, with 0 ln 0 = 0.
pub fn entropy(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput("entropy of an empty set"));
    }
    let n = total as f64;
    Ok(class_counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum())
}

/// Sum over target dimensions of the population variance.
pub fn variance_sum(targets: &Matrix) -> f64 {
    let n = targets.rows() as f64;
    let means = targets.column_means();
    let mut acc = 0.0;
    for r in 0..targets.rows() {
        for (c, m) in means.iter().enumerate() {
            let d = targets.get(r, c) - m;
            acc += d * d;
        }
    }
    acc / n
}

/// Gaussian differential entropy in the paper's printed closed form,
/// `q/2 (1 - log 2 pi) + 1/2 log det(Sigma + eps I)`, with the population
/// covariance estimate.
pub fn gaussian_entropy(targets: &Matrix, eps: f64) -> Result<f64> {
    if targets.rows() < 2 {
        return Err(Error::OutOfRange(
            "gaussian_entropy needs at least 2 samples".into(),
        ));
    }
    let q = targets.cols();
    let means = targets.column_means();
    let mut cov = nalgebra::DMatrix::zeros(q, q);
    for r in 0..targets.rows() {
        for i in 0..q {
            let di = targets.get(r, i) - means[i];
            for j in 0..q {
                let dj = targets.get(r, j) - means[j];
                cov[(i, j)] += di * dj;
            }
        }
    }
    cov /= targets.rows() as f64;
    for i in 0..q {
        cov[(i, i)] += eps;
    }
    let det = cov.determinant();
    Ok(q as f64 / 2.0 * (1.0 - (2.0 * std::f64::consts::PI).ln()) + 0.5 * det.ln())
}

fn subset_impurity(targets: &Targets, idx: &[usize], impurity: Impurity) -> Result<f64> {
    match (targets, impurity) {
        (Targets::Classes { labels, num_classes }, Impurity::Entropy) => {
            let mut counts = vec![0usize; *num_classes];
            for &i in idx {
                counts[labels[i]] += 1;
            }
            entropy(&counts)
        }
        (Targets::Values(m), Impurity::VarianceSum) => Ok(variance_sum(&m.select_rows(idx))),
        (Targets::Values(m), Impurity::GaussianEntropy) => {
            if idx.len() < 2 {
                // a single sample carries no spread; treat as pure
                return Ok(f64::NEG_INFINITY);
            }
            gaussian_entropy(&m.select_rows(idx), GAUSS_EPS)
        }
        _ => Err(Error::OutOfRange(
            "impurity incompatible with target kind".into(),
        )),
    }
}

/// Size-weighted child impurity, `(|L| H(L) + |R| H(R)) / (|L| + |R|)`.
pub fn split_score(
    targets: &Targets,
    left: &[usize],
    right: &[usize],
    impurity: Impurity,
) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::EmptyInput("split with an empty child"));
    }
    let nl = left.len() as f64;
    let nr = right.len() as f64;
    let hl = subset_impurity(targets, left, impurity)?;
    let hr = subset_impurity(targets, right, impurity)?;
    Ok((nl * hl + nr * hr) / (nl + nr))
}

/// Information gain of a split: parent impurity minus the split score.
pub fn info_gain(
    targets: &Targets,
    parent: &[usize],
    left: &[usize],
    right: &[usize],
    impurity: Impurity,
) -> Result<f64> {
    let hp = subset_impurity(targets, parent, impurity)?;
    Ok(hp - split_score(targets, left, right, impurity)?)
}

/// Outcome of the candidate search at one node.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitChoice {
    Split { dim: usize, threshold: f64, gain: f64 },
    NoSplit,
}

/// Search the candidate (dimension, threshold) set for the maximum
/// information gain. Standard mode draws #H dims and uniform thresholds in
/// each dim's node range; JMPF mode draws #H dims with the threshold fixed
/// at zero.
pub fn best_split(
    x: &Matrix,
    targets: &Targets,
    node: &[usize],
    config: &ForestConfig,
    rng: &mut ChaCha12Rng,
) -> Result<SplitChoice> {
    let d = x.cols();
    let h = config.num_candidate_dims.min(d);
    let dims: Vec<usize> = rand::seq::index::sample(rng, d, h).into_iter().collect();

    let parent_impurity = subset_impurity(targets, node, config.impurity)?;
    let mut best: Option<(usize, f64, f64)> = None;

    let consider = |dim: usize, thr: f64, best: &mut Option<(usize, f64, f64)>| -> Result<()> {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &i in node {
            if x.get(i, dim) < thr {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        if left.is_empty() || right.is_empty() {
            return Ok(());
        }
        let gain = parent_impurity - split_score(targets, &left, &right, config.impurity)?;
        if best.as_ref().is_none_or(|b| gain > b.2) {
            *best = Some((dim, thr, gain));
        }
        Ok(())
    };

    match config.mode {
        SplitMode::Jmpf => {
            for dim in dims {
                consider(dim, 0.0, &mut best)?;
            }
        }
        SplitMode::Standard => {
            for dim in dims {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &i in node {
                    lo = lo.min(x.get(i, dim));
                    hi = hi.max(x.get(i, dim));
                }
                if lo >= hi {
                    continue;
                }
                for _ in 0..config.num_candidate_thresholds {
                    let thr = rng.random_range(lo..hi);
                    consider(dim, thr, &mut best)?;
                }
            }
        }
    }

    Ok(match best {
        Some((dim, threshold, gain)) if gain > MIN_GAIN => SplitChoice::Split {
            dim,
            threshold,
            gain,
        },
        _ => SplitChoice::NoSplit,
    })
}

fn fit_leaf(
    x: &Matrix,
    targets: &Targets,
    idx: &[usize],
    parent_idx: Option<&[usize]>,
    config: &ForestConfig,
) -> Result<LeafModel> {
    match (config.task, targets) {
        (Task::Classification, Targets::Classes { labels, num_classes }) => {
            let mut counts = vec![0.0; *num_classes];
            for &i in idx {
                counts[labels[i]] += 1.0;
            }
            let total: f64 = counts.iter().sum();
            counts.iter_mut().for_each(|c| *c /= total);
            Ok(LeafModel::Histogram(counts))
        }
        (Task::Regression, Targets::Values(m)) => {
            Ok(LeafModel::Mean(m.select_rows(idx).column_means()))
        }
        (Task::RidgeLeaves, Targets::Values(m)) => {
            // leaves with fewer than 2 samples are fitted from the parent's set
            let fit_idx = if idx.len() < 2 {
                parent_idx.unwrap_or(idx)
            } else {
                idx
            };
            let p = numerics::ridge_projection(
                &x.select_rows(fit_idx),
                &m.select_rows(fit_idx),
                config.lambda,
            )?;
            Ok(LeafModel::Ridge {
                p,
                samples: idx.len() as u32,
            })
        }
        _ => Err(Error::OutOfRange("task incompatible with target kind".into())),
    }
}

fn grow(
    x: &Matrix,
    targets: &Targets,
    idx: Vec<usize>,
    parent_idx: Option<&[usize]>,
    depth: usize,
    config: &ForestConfig,
    rng: &mut ChaCha12Rng,
    nodes: &mut Vec<Node>,
) -> Result<usize> {
    let stop = depth >= config.max_depth
        || idx.len() < config.min_samples_split
        || subset_impurity(targets, &idx, config.impurity)? <= 0.0
            && matches!(config.impurity, Impurity::Entropy | Impurity::VarianceSum);

    let choice = if stop {
        SplitChoice::NoSplit
    } else {
        best_split(x, targets, &idx, config, rng)?
    };

    match choice {
        SplitChoice::NoSplit => {
            let leaf = fit_leaf(x, targets, &idx, parent_idx, config)?;
            nodes.push(Node::Leaf(leaf));
            Ok(nodes.len() - 1)
        }
        SplitChoice::Split { dim, threshold, .. } => {
            let (mut l, mut r) = (Vec::new(), Vec::new());
            for &i in &idx {
                if x.get(i, dim) < threshold {
                    l.push(i);
                } else {
                    r.push(i);
                }
            }
            nodes.push(Node::Split {
                dim,
                threshold,
                left: 0,
                right: 0,
            });
            let at = nodes.len() - 1;
            let left = grow(x, targets, l, Some(&idx), depth + 1, config, rng, nodes)?;
            let right = grow(x, targets, r, Some(&idx), depth + 1, config, rng, nodes)?;
            if let Node::Split {
                left: lslot,
                right: rslot,
                ..
            } = &mut nodes[at]
            {
                *lslot = left;
                *rslot = right;
            }
            Ok(at)
        }
    }
}

fn tree_rng(seed: u64, tree_index: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64 + 1);
    rng
}

/// Train a forest of `config.num_trees` bagged trees. Trees are built in
/// parallel; each draws from its own seed-derived stream, so results do not
/// depend on scheduling.
pub fn train_forest(x: &Matrix, targets: &Targets, config: &ForestConfig) -> Result<Forest> {
    config.validate()?;
    if x.rows() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} samples vs {} targets",
            x.rows(),
            targets.len()
        )));
    }
    if x.rows() < config.min_samples_split {
        return Err(Error::OutOfRange(format!(
            "need at least min_samples_split = {} samples",
            config.min_samples_split
        )));
    }
    if let Targets::Classes { labels, num_classes } = targets {
        if labels.iter().any(|&l| l >= *num_classes) {
            return Err(Error::OutOfRange("class index out of range".into()));
        }
    }

    let n = x.rows();
    let trees: Vec<Tree> = (0..config.num_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(config.seed, t);
            let bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut nodes = Vec::new();
            grow(x, targets, bag, None, 0, config, &mut rng, &mut nodes)?;
            Ok(Tree { nodes })
        })
        .collect::<Result<_>>()?;

    let (num_classes, target_dim) = match targets {
        Targets::Classes { num_classes, .. } => (*num_classes, 0),
        Targets::Values(m) => (0, m.cols()),
    };

    Ok(Forest {
        config: config.clone(),
        trees,
        feature_dim: x.cols(),
        num_classes,
        target_dim,
    })
}

impl Forest {
    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.feature_dim {
            return Err(Error::ShapeMismatch(format!(
                "sample dim {} vs forest dim {}",
                v.len(),
                self.feature_dim
            )));
        }
        Ok(())
    }

    /// Average the per-tree leaf histograms.
    pub fn class_probabilities(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        let mut probs = vec![0.0; self.num_classes];
        for tree in &self.trees {
            match tree.route(v) {
                LeafModel::Histogram(h) => {
                    for (p, hi) in probs.iter_mut().zip(h) {
                        *p += hi;
                    }
                }
                _ => return Err(Error::OutOfRange("not a classification forest".into())),
            }
        }
        let t = self.trees.len() as f64;
        probs.iter_mut().for_each(|p| *p /= t);
        Ok(probs)
    }

    /// Predicted class: argmax of the averaged histograms, ties broken
    /// toward the lowest class index.
    pub fn predict_class(&self, v: &[f64]) -> Result<usize> {
        let probs = self.class_probabilities(v)?;
        let mut best = 0usize;
        for (k, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = k;
            }
        }
        Ok(best)
    }

    /// Mean over trees of the leaf prediction: leaf means for regression
    /// forests, `P . v` for ridge-leaf forests.
    pub fn predict_value(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        let mut acc = vec![0.0; self.target_dim];
        for tree in &self.trees {
            match tree.route(v) {
                LeafModel::Mean(m) => {
                    for (a, mi) in acc.iter_mut().zip(m) {
                        *a += mi;
                    }
                }
                LeafModel::Ridge { p, .. } => {
                    for (q, a) in acc.iter_mut().enumerate() {
                        let mut dot = 0.0;
                        for (c, vi) in v.iter().enumerate() {
                            dot += p.get(q, c) * vi;
                        }
                        *a += dot;
                    }
                }
                LeafModel::Histogram(_) => {
                    return Err(Error::OutOfRange("not a regression forest".into()))
                }
            }
        }
        let t = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= t);
        Ok(acc)
    }

    /// Visit every node of every tree.
    pub fn for_each_node(&self, mut f: impl FnMut(&Node)) {
        for tree in &self.trees {
            for node in &tree.nodes {
                f(node);
            }
        }
    }
}

#[cfg(test)]
mod tests;
