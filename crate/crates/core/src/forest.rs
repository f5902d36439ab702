//! CART decision trees (Gini impurity) and bootstrap-aggregated random
//! forests.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{rng_for, stream, Rng};

/// Anything that maps a feature row to class probabilities.
pub trait Classifier: Sync {
    fn n_features(&self) -> usize;

    fn n_classes(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> Vec<f64>;

    /// Most probable class; ties go to the lowest class index.
    fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.predict_proba(x))
    }

    /// The trees whose averaged leaf distributions make up the prediction,
    /// when the model is a tree ensemble.
    fn tree_ensemble(&self) -> Option<&[DecisionTree]> {
        None
    }
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate().skip(1) {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy<M: Classifier + ?Sized>(model: &M, x: &Matrix, y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let correct = x
        .rows()
        .zip(y)
        .filter(|(row, &label)| model.predict(row) == label)
        .count();
    correct as f64 / y.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means ceil(sqrt(d)).
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    /// `None` grows trees until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    /// Train each tree on a bootstrap resample of size n.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            max_features: None,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_max_features(&self, n_features: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1))
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument("min_samples_leaf must be >= 1".into()));
        }
        if let Some(m) = self.max_features {
            if m == 0 || m > n_features {
                return Err(Error::InvalidArgument(format!(
                    "max_features must lie in [1, {n_features}], got {m}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { distribution: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    n_features: usize,
    n_classes: usize,
    /// Root at index 0.
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Features used by at least one split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { distribution } => return distribution,
            }
        }
    }

    /// Builds a tree from explicit nodes (root first). Checks that child
    /// indices and feature indices are in range and leaf distributions have
    /// `n_classes` entries.
    pub fn from_nodes(n_features: usize, n_classes: usize, nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("tree has no nodes".into()));
        }
        for n in &nodes {
            match n {
                Node::Split {
                    feature,
                    left,
                    right,
                    threshold,
                } => {
                    if *feature >= n_features
                        || *left >= nodes.len()
                        || *right >= nodes.len()
                        || !threshold.is_finite()
                    {
                        return Err(Error::InvalidArgument("malformed split node".into()));
                    }
                }
                Node::Leaf { distribution } => {
                    if distribution.len() != n_classes {
                        return Err(Error::InvalidArgument("malformed leaf node".into()));
                    }
                }
            }
        }
        Ok(DecisionTree {
            n_features,
            n_classes,
            nodes,
        })
    }
}

impl Classifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.leaf(x).to_vec()
    }

    fn tree_ensemble(&self) -> Option<&[DecisionTree]> {
        Some(std::slice::from_ref(self))
    }
}

fn check_training_data(x: &Matrix, y: &[usize], n_classes: usize) -> Result<()> {
    if x.n_cols() == 0 {
        return Err(Error::InvalidArgument("empty feature space".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "training needs at least 2 rows, got {}",
            x.n_rows()
        )));
    }
    if let Some(bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    Ok(())
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    min_samples_leaf: usize,
    max_depth: Option<usize>,
    rng: Rng,
    nodes: Vec<Node>,
    features: Vec<usize>,
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Rows going left after sorting `rows` by the split feature.
    n_left: usize,
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let mut counts = vec![0.0; self.n_classes];
        for &r in rows {
            counts[self.y[r]] += 1.0;
        }
        let n = rows.len() as f64;
        counts.iter_mut().for_each(|c| *c /= n);
        self.nodes.push(Node::Leaf {
            distribution: counts,
        });
        self.nodes.len() - 1
    }

    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let first = self.y[rows[0]];
        let pure = rows.iter().all(|&r| self.y[r] == first);
        if pure
            || rows.len() < 2 * self.min_samples_leaf
            || self.max_depth.is_some_and(|m| depth >= m)
        {
            return self.leaf(rows);
        }
        let Some(split) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        let f = split.feature;
        let x = self.x;
        rows.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
        let id = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: f,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let (l, r) = rows.split_at_mut(split.n_left);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        if let Node::Split {
            left: ln, right: rn, ..
        } = &mut self.nodes[id]
        {
            *ln = left;
            *rn = right;
        }
        id
    }

    /// Lowest weighted Gini impurity over a random feature subset. Features
    /// constant within the node do not count towards `max_features`; zero
    /// impurity decrease is accepted so patterns such as XOR can be split.
    fn best_split(&mut self, rows: &[usize]) -> Option<Split> {
        let x = self.x;
        let n = rows.len();
        let mut total = vec![0usize; self.n_classes];
        for &r in rows {
            total[self.y[r]] += 1;
        }

        self.features.shuffle(&mut self.rng);
        let mut best: Option<(f64, Split)> = None;
        let mut tried = 0;
        let mut sorted = rows.to_vec();
        let mut left = vec![0usize; self.n_classes];
        for fi in 0..self.features.len() {
            if tried == self.max_features {
                break;
            }
            let f = self.features[fi];
            sorted.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
            if x.get(sorted[0], f) == x.get(sorted[n - 1], f) {
                continue;
            }
            tried += 1;
            left.iter_mut().for_each(|c| *c = 0);
            for i in 0..n - 1 {
                left[self.y[sorted[i]]] += 1;
                let (a, b) = (x.get(sorted[i], f), x.get(sorted[i + 1], f));
                if a == b {
                    continue;
                }
                let n_left = i + 1;
                let n_right = n - n_left;
                if n_left < self.min_samples_leaf || n_right < self.min_samples_leaf {
                    continue;
                }
                // Minimizing n_l * gini_l + n_r * gini_r is maximizing
                // sum(c_l^2) / n_l + sum(c_r^2) / n_r.
                let mut sl = 0.0;
                let mut sr = 0.0;
                for (c, &l) in left.iter().enumerate() {
                    let r = total[c] - l;
                    sl += (l * l) as f64;
                    sr += (r * r) as f64;
                }
                let score = sl / n_left as f64 + sr / n_right as f64;
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some((
                        score,
                        Split {
                            feature: f,
                            threshold,
                            n_left,
                        },
                    ));
                }
            }
        }
        best.map(|(_, s)| s)
    }
}

fn grow_tree(
    x: &Matrix,
    y: &[usize],
    rows: &mut [usize],
    n_classes: usize,
    params: &ForestParams,
    rng: Rng,
) -> DecisionTree {
    let mut b = TreeBuilder {
        x,
        y,
        n_classes,
        max_features: params.resolved_max_features(x.n_cols()),
        min_samples_leaf: params.min_samples_leaf,
        max_depth: params.max_depth,
        rng,
        nodes: Vec::new(),
        features: (0..x.n_cols()).collect(),
    };
    b.build(rows, 0);
    DecisionTree {
        n_features: x.n_cols(),
        n_classes,
        nodes: b.nodes,
    }
}

/// Grows one tree on all rows. A single-class input yields a single leaf.
pub fn train_tree(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<DecisionTree> {
    check_training_data(x, y, n_classes)?;
    params.validate(x.n_cols())?;
    let mut rows: Vec<usize> = (0..x.n_rows()).collect();
    Ok(grow_tree(
        x,
        y,
        &mut rows,
        n_classes,
        params,
        rng_for(seed, stream::TREE, 0),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub params: ForestParams,
    n_features: usize,
    n_classes: usize,
    trees: Vec<DecisionTree>,
}

const FORMAT_TAG: &str = "normlens-forest";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    feature_names: Vec<String>,
    #[serde(flatten)]
    forest: RandomForest,
}

impl RandomForest {
    /// Tree `i` is grown from the generator seeded with
    /// `derive_seed(params.seed, TREE, i)`, which draws its bootstrap sample
    /// and its per-split feature subsets. Trees train in parallel; the result
    /// does not depend on scheduling.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &ForestParams) -> Result<Self> {
        check_training_data(x, y, n_classes)?;
        params.validate(x.n_cols())?;
        let n = x.n_rows();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(params.seed, stream::TREE, i as u64);
                let mut rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow_tree(x, y, &mut rows, n_classes, params, rng)
            })
            .collect();
        Ok(RandomForest {
            params: *params,
            n_features: x.n_cols(),
            n_classes,
            trees,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn to_json(&self, feature_names: &[String]) -> Result<String> {
        let doc = ForestDocument {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            feature_names: feature_names.to_vec(),
            forest: self.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// Returns the forest and the feature names stored alongside it.
    pub fn from_json(text: &str) -> Result<(Self, Vec<String>)> {
        let doc: ForestDocument = serde_json::from_str(text)?;
        if doc.format != FORMAT_TAG || doc.version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        let f = doc.forest;
        for t in &f.trees {
            DecisionTree::from_nodes(f.n_features, f.n_classes, t.nodes.clone())?;
        }
        Ok((f, doc.feature_names))
    }
}

impl Classifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (acc, v) in p.iter_mut().zip(t.leaf(x)) {
                *acc += v;
            }
        }
        let k = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= k);
        p
    }

    fn tree_ensemble(&self) -> Option<&[DecisionTree]> {
        Some(&self.trees)
    }
}
