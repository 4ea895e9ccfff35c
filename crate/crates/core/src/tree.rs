//! Binary C4.5-style decision tree over numeric attributes.
//!
//! Splits are chosen by gain ratio among the attributes whose information
//! gain is at least average, with the usual penalty of
//! `log2(#candidate thresholds) / total weight` on numeric gains. All counts
//! and entropies use instance weights. After growing, the tree is pruned
//! bottom-up by subtree replacement using pessimistic error estimates at the
//! configured confidence.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::treatments::Instances;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("pruning confidence {0} outside [0.10, 0.30]")]
    Confidence(f64),
    #[error("minimum leaf weight must be positive, got {0}")]
    MinLeafWeight(f64),
    #[error("need at least 2 training instances, got {0}")]
    TooFewInstances(usize),
    #[error("training weights sum to zero")]
    ZeroWeight,
    #[error("no attributes to train on")]
    NoAttributes,
    #[error("non-finite feature value")]
    NonFinite,
    #[error("instance has {got} attributes, tree expects {expected}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub pruning_confidence: f64,
    pub min_leaf_weight: f64,
    pub prune: bool,
    /// Recorded with results; growth itself is deterministic and does not
    /// draw random numbers.
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            pruning_confidence: 0.25,
            min_leaf_weight: 2.0,
            prune: true,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), TreeError> {
        if !(0.10..=0.30).contains(&self.pruning_confidence) {
            return Err(TreeError::Confidence(self.pruning_confidence));
        }
        if !(self.min_leaf_weight > 0.0) {
            return Err(TreeError::MinLeafWeight(self.min_leaf_weight));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        defective: f64,
        clean: f64,
    },
    Split {
        attribute: usize,
        /// Instances with `value <= threshold` go left.
        threshold: f64,
        defective: f64,
        clean: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: Node,
    attributes: usize,
}

fn entropy(a: f64, b: f64) -> f64 {
    let total = a + b;
    if total <= 0.0 {
        return 0.0;
    }
    [a, b]
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    attribute: usize,
    threshold: f64,
    gain: f64,
    split_info: f64,
}

struct Grower<'a> {
    data: &'a Instances,
    min_leaf: f64,
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> (f64, f64) {
        rows.iter().fold((0.0, 0.0), |(d, c), &i| {
            let w = self.data.weights[i];
            if self.data.labels[i] {
                (d + w, c)
            } else {
                (d, c + w)
            }
        })
    }

    /// Best threshold on one attribute by corrected information gain.
    fn best_threshold(&self, rows: &[usize], attribute: usize, parent: (f64, f64)) -> Option<Candidate> {
        let x = &self.data.features;
        let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&i| (x[(i, attribute)], i)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let total = parent.0 + parent.1;
        let parent_entropy = entropy(parent.0, parent.1);
        let mut left = (0.0, 0.0);
        let mut best: Option<(f64, f64, f64)> = None; // (gain, threshold, left weight)
        let mut candidates = 0usize;
        for k in 0..sorted.len() - 1 {
            let (v, i) = sorted[k];
            let w = self.data.weights[i];
            if self.data.labels[i] {
                left.0 += w;
            } else {
                left.1 += w;
            }
            let next = sorted[k + 1].0;
            if next <= v {
                continue;
            }
            let lw = left.0 + left.1;
            let rw = total - lw;
            if lw < self.min_leaf || rw < self.min_leaf {
                continue;
            }
            candidates += 1;
            let right = (parent.0 - left.0, parent.1 - left.1);
            let gain =
                parent_entropy - (lw / total) * entropy(left.0, left.1) - (rw / total) * entropy(right.0, right.1);
            if best.is_none_or(|(g, _, _)| gain > g) {
                let mid = v + (next - v) / 2.0;
                let threshold = if mid >= next { v } else { mid };
                best = Some((gain, threshold, lw));
            }
        }
        let (gain, threshold, lw) = best?;
        let gain = gain - (candidates as f64).log2() / total;
        let split_info = entropy(lw, total - lw);
        (gain > 0.0 && split_info > 0.0).then_some(Candidate {
            attribute,
            threshold,
            gain,
            split_info,
        })
    }

    fn grow(&self, rows: Vec<usize>) -> Node {
        let (defective, clean) = self.counts(&rows);
        let leaf = Node::Leaf { defective, clean };
        if defective <= 0.0 || clean <= 0.0 || defective + clean < 2.0 * self.min_leaf {
            return leaf;
        }
        let candidates: Vec<Candidate> = (0..self.data.features.ncols())
            .filter_map(|j| self.best_threshold(&rows, j, (defective, clean)))
            .collect();
        if candidates.is_empty() {
            return leaf;
        }
        let average = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
        let mut chosen: Option<&Candidate> = None;
        for c in candidates.iter().filter(|c| c.gain >= average - 1e-3) {
            let ratio = c.gain / c.split_info;
            if chosen.is_none_or(|b| ratio > b.gain / b.split_info) {
                chosen = Some(c);
            }
        }
        let Some(c) = chosen else { return leaf };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.data.features[(i, c.attribute)] <= c.threshold);
        Node::Split {
            attribute: c.attribute,
            threshold: c.threshold,
            defective,
            clean,
            left: Box::new(self.grow(l)),
            right: Box::new(self.grow(r)),
        }
    }
}

/// Upper-confidence extra errors for `errors` misclassified out of `n`,
/// following C4.5's binomial approximation.
pub fn pessimistic_extra_errors(n: f64, errors: f64, confidence: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if errors < 1.0 {
        let base = n * (1.0 - confidence.powf(1.0 / n));
        if errors == 0.0 {
            return base;
        }
        return base + errors * (pessimistic_extra_errors(n, 1.0, confidence) - base);
    }
    if errors + 0.5 >= n {
        return (n - errors).max(0.0);
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - confidence);
    let f = (errors + 0.5) / n;
    let z2 = z * z;
    let r = (f + z2 / (2.0 * n) + z * (f / n - f * f / n + z2 / (4.0 * n * n)).sqrt()) / (1.0 + z2 / n);
    r * n - errors
}

fn leaf_estimate(defective: f64, clean: f64, confidence: f64) -> f64 {
    let n = defective + clean;
    let e = defective.min(clean);
    e + pessimistic_extra_errors(n, e, confidence)
}

fn prune(node: Node, confidence: f64) -> (Node, f64) {
    match node {
        Node::Leaf { defective, clean } => {
            let est = leaf_estimate(defective, clean, confidence);
            (node, est)
        }
        Node::Split {
            attribute,
            threshold,
            defective,
            clean,
            left,
            right,
        } => {
            let (left, le) = prune(*left, confidence);
            let (right, re) = prune(*right, confidence);
            let as_leaf = leaf_estimate(defective, clean, confidence);
            if as_leaf <= le + re + 0.1 {
                (Node::Leaf { defective, clean }, as_leaf)
            } else {
                (
                    Node::Split {
                        attribute,
                        threshold,
                        defective,
                        clean,
                        left: Box::new(left),
                        right: Box::new(right),
                    },
                    le + re,
                )
            }
        }
    }
}

pub fn train_tree(data: &Instances, params: &TreeParams) -> Result<DecisionTree, TreeError> {
    params.validate()?;
    if data.len() < 2 {
        return Err(TreeError::TooFewInstances(data.len()));
    }
    if data.features.ncols() == 0 {
        return Err(TreeError::NoAttributes);
    }
    if data.features.iter().any(|v| !v.is_finite()) {
        return Err(TreeError::NonFinite);
    }
    if !(data.weights.iter().sum::<f64>() > 0.0) {
        return Err(TreeError::ZeroWeight);
    }
    let grower = Grower {
        data,
        min_leaf: params.min_leaf_weight,
    };
    let mut root = grower.grow((0..data.len()).collect());
    if params.prune {
        root = prune(root, params.pruning_confidence).0;
    }
    Ok(DecisionTree {
        root,
        attributes: data.features.ncols(),
    })
}

impl DecisionTree {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaves()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Laplace-smoothed defective fraction at the leaf the instance reaches.
    pub fn predict_proba(&self, instance: &[f64]) -> Result<f64, TreeError> {
        if instance.len() != self.attributes {
            return Err(TreeError::Arity {
                expected: self.attributes,
                got: instance.len(),
            });
        }
        if instance.iter().any(|v| !v.is_finite()) {
            return Err(TreeError::NonFinite);
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { defective, clean } => {
                    return Ok(laplace(*defective, *clean));
                }
                Node::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if instance[*attribute] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict(&self, instance: &[f64], threshold: f64) -> Result<bool, TreeError> {
        Ok(self.predict_proba(instance)? >= threshold)
    }

    /// One node per line, children indented by two spaces.
    pub fn dump(&self) -> String {
        fn walk(node: &Node, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match node {
                Node::Leaf { defective, clean } => {
                    let _ = writeln!(out, "{pad}leaf defective={defective} clean={clean}");
                }
                Node::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    let _ = writeln!(out, "{pad}attr {attribute} <= {threshold}");
                    walk(left, depth + 1, out);
                    let _ = writeln!(out, "{pad}attr {attribute} > {threshold}");
                    walk(right, depth + 1, out);
                }
            }
        }
        let mut out = String::new();
        walk(&self.root, 0, &mut out);
        out
    }
}

pub fn laplace(defective: f64, clean: f64) -> f64 {
    (defective + 1.0) / (defective + clean + 2.0)
}
