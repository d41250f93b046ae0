//! Random-forest classifier for binary outcomes: bootstrap samples, Gini
//! splits over a random feature subset at every node, majority vote and
//! impurity importance.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::DenseMatrix;
use crate::seed::{derive_seed, rng_from};

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            min_node_size: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Weighted Gini decrease achieved by this split.
        decrease: f64,
    },
    Leaf {
        counts: [u32; 2],
    },
}

/// A binary tree stored as a node arena; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(counts: [u32; 2]) -> Self {
        Self {
            nodes: vec![Node::Leaf { counts }],
        }
    }

    fn leaf_counts(&self, row: &[f64]) -> [u32; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the leaf reached by `row`; ties go to class 0.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let c = self.leaf_counts(row);
        u8::from(c[1] > c[0])
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Normalized impurity importance per feature (all zero if no tree
    /// split).
    pub importances: Vec<f64>,
}

impl ForestModel {
    /// Assembles a model from existing trees, recomputing importances.
    pub fn from_trees(trees: Vec<Tree>, n_features: usize, params: ForestParams) -> Self {
        let importances = impurity_importance(&trees, n_features);
        Self {
            format_version: MODEL_FORMAT_VERSION,
            params,
            n_features,
            trees,
            importances,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format version {}",
                m.format_version
            )));
        }
        Ok(m)
    }
}

fn check_outcome(y: &[u8]) -> Result<()> {
    if let Some(v) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidArgument(format!(
            "outcome must be 0/1, found {v}"
        )));
    }
    Ok(())
}

/// Trains a forest on rows of `x` with binary labels `y`.
pub fn rf_train(x: &DenseMatrix, y: &[u8], params: &ForestParams) -> Result<ForestModel> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Shape(format!(
            "{n} rows but {} outcome values",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two rows".into()));
    }
    check_outcome(y)?;
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::InvalidArgument(format!(
            "outcome has a single class ({})",
            y[0]
        )));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
    }
    let mtry = params.resolved_mtry(p);
    if mtry == 0 || mtry > p {
        return Err(Error::InvalidArgument(format!(
            "mtry must be in 1..={p}, got {mtry}"
        )));
    }
    let min_node = params.min_node_size.max(1);
    let columns: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(derive_seed(params.seed, t as u64));
            let samples: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(&columns, y, samples, mtry, min_node, &mut rng)
        })
        .collect();
    Ok(ForestModel::from_trees(trees, p, params.clone()))
}

fn class_counts(y: &[u8], samples: &[usize]) -> [u32; 2] {
    let mut c = [0u32; 2];
    for &i in samples {
        c[y[i] as usize] += 1;
    }
    c
}

fn sum_sq_over(c: [u32; 2]) -> f64 {
    let total = (c[0] + c[1]) as f64;
    if total == 0.0 {
        return 0.0;
    }
    let (a, b) = (c[0] as f64, c[1] as f64);
    (a * a + b * b) / total
}

struct Split {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

fn best_split(
    columns: &[Vec<f64>],
    y: &[u8],
    samples: &[usize],
    features: &[usize],
    counts: [u32; 2],
    buf: &mut Vec<(f64, u8)>,
) -> Option<Split> {
    let parent = sum_sq_over(counts);
    let mut best: Option<Split> = None;
    for &f in features {
        let col = &columns[f];
        buf.clear();
        buf.extend(samples.iter().map(|&i| (col[i], y[i])));
        buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0u32; 2];
        for j in 0..buf.len() - 1 {
            left[buf[j].1 as usize] += 1;
            let (a, b) = (buf[j].0, buf[j + 1].0);
            if a == b {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let decrease = sum_sq_over(left) + sum_sq_over(right) - parent;
            if decrease > 1e-12 && best.as_ref().is_none_or(|s| decrease > s.decrease) {
                let mut threshold = 0.5 * (a + b);
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    decrease,
                });
            }
        }
    }
    best
}

fn grow_tree<R: Rng>(
    columns: &[Vec<f64>],
    y: &[u8],
    samples: Vec<usize>,
    mtry: usize,
    min_node: usize,
    rng: &mut R,
) -> Tree {
    let p = columns.len();
    let mut nodes = vec![Node::Leaf { counts: [0, 0] }];
    let mut stack = vec![(0usize, samples)];
    let mut buf = Vec::new();
    while let Some((id, here)) = stack.pop() {
        let counts = class_counts(y, &here);
        let pure = counts[0] == 0 || counts[1] == 0;
        let split = if pure || here.len() <= min_node {
            None
        } else {
            let mut features = sample(rng, p, mtry).into_vec();
            features.sort_unstable();
            best_split(columns, y, &here, &features, counts, &mut buf)
        };
        match split {
            None => nodes[id] = Node::Leaf { counts },
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = here
                    .iter()
                    .partition(|&&i| columns[s.feature][i] <= s.threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { counts: [0, 0] });
                let right = nodes.len();
                nodes.push(Node::Leaf { counts: [0, 0] });
                nodes[id] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                    decrease: s.decrease,
                };
                stack.push((right, r));
                stack.push((left, l));
            }
        }
    }
    Tree { nodes }
}

fn impurity_importance(trees: &[Tree], p: usize) -> Vec<f64> {
    let mut imp = vec![0.0; p];
    for tree in trees {
        for node in &tree.nodes {
            if let Node::Split {
                feature, decrease, ..
            } = node
            {
                imp[*feature] += decrease;
            }
        }
    }
    let total: f64 = imp.iter().sum();
    if total > 0.0 {
        imp.iter_mut().for_each(|v| *v /= total);
    } else {
        log::warn!("forest has no splits; importances left at zero");
    }
    imp
}

/// Majority vote over trees; ties go to class 0.
pub fn rf_predict(model: &ForestModel, x: &DenseMatrix) -> Result<Vec<u8>> {
    if x.cols() != model.n_features {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            model.n_features,
            x.cols()
        )));
    }
    let rows: Vec<&[f64]> = x.row_iter().collect();
    Ok(rows
        .par_iter()
        .map(|row| {
            let ones = model
                .trees
                .iter()
                .filter(|t| t.predict_row(row) == 1)
                .count();
            u8::from(2 * ones > model.trees.len())
        })
        .collect())
}

/// Normalized impurity importances; all zero when no tree has a split.
pub fn rf_importance(model: &ForestModel) -> Vec<f64> {
    model.importances.clone()
}

pub fn accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}
