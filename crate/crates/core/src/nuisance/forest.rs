//! Bagged CART regression trees.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{NuisanceModel, Predictor};
use crate::error::{Error, Result};
use crate::seed::{derive, rng_from, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` means ⌊p/3⌋ (at least 1).
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 100, mtry: None, min_leaf: 5, bootstrap: true }
    }
}

impl ForestParams {
    fn features_per_split(&self, p: usize) -> usize {
        self.mtry.unwrap_or(p / 3).clamp(1, p)
    }
}

pub const MIN_FOREST_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, z: ArrayView1<f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    i = if z[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

struct Builder<'a> {
    z: ArrayView2<'a, f64>,
    y: ArrayView1<'a, f64>,
    mtry: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
    // scratch buffer of (feature value, response) pairs
    pairs: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn build(&mut self, rows: &mut [usize], rng: &mut Rng) -> usize {
        let id = self.nodes.len();
        let m = rows.len();
        let sum: f64 = rows.iter().map(|&i| self.y[i]).sum();
        let mean = sum / m as f64;
        self.nodes.push(Node::Leaf(mean));
        if m < 2 * self.min_leaf || rows.iter().all(|&i| self.y[i] == self.y[rows[0]]) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows, sum, rng) else {
            return id;
        };
        let mut k = 0;
        for r in 0..m {
            if self.z[[rows[r], feature]] <= threshold {
                rows.swap(r, k);
                k += 1;
            }
        }
        let (lo, hi) = rows.split_at_mut(k);
        let left = self.build(lo, rng);
        let right = self.build(hi, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    /// Maximizes the SSE reduction, equivalently sumL²/nL + sumR²/nR.
    fn best_split(&mut self, rows: &[usize], total: f64, rng: &mut Rng) -> Option<(usize, f64)> {
        let m = rows.len();
        let p = self.z.ncols();
        let parent = total * total / m as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in sample(rng, p, self.mtry).into_iter() {
            self.pairs.clear();
            self.pairs.extend(rows.iter().map(|&i| (self.z[[i, feature]], self.y[i])));
            self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for k in 1..m {
                left_sum += self.pairs[k - 1].1;
                if k < self.min_leaf || m - k < self.min_leaf {
                    continue;
                }
                let (a, b) = (self.pairs[k - 1].0, self.pairs[k].0);
                if a == b {
                    continue;
                }
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / k as f64 + right_sum * right_sum / (m - k) as f64;
                if score > parent + 1e-12 * parent.abs().max(1.0)
                    && best.is_none_or(|(s, _, _)| score > s)
                {
                    best = Some((score, feature, 0.5 * (a + b)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Average of bagged regression trees.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

impl RandomForest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}

impl Predictor for RandomForest {
    fn predict_row(&self, z: ArrayView1<f64>) -> f64 {
        self.trees.iter().map(|t| t.predict_row(z)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn fit_forest(
    z: ArrayView2<f64>,
    y: ArrayView1<f64>,
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForest> {
    let (n, p) = z.dim();
    if n != y.len() {
        return Err(Error::DimensionMismatch(format!("z has {n} rows, y has {}", y.len())));
    }
    if n < MIN_FOREST_ROWS {
        return Err(Error::TooFewRows { needed: MIN_FOREST_ROWS, got: n });
    }
    if params.trees == 0 || params.min_leaf == 0 || p == 0 {
        return Err(Error::DegenerateInput(
            "forest needs at least one tree, one feature and min_leaf >= 1".into(),
        ));
    }
    let mut builder = Builder {
        z,
        y,
        mtry: params.features_per_split(p),
        min_leaf: params.min_leaf,
        nodes: Vec::new(),
        pairs: Vec::with_capacity(n),
    };
    let trees = (0..params.trees)
        .map(|t| {
            let mut rng = rng_from(derive(seed, &[t as u64]));
            let mut rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            builder.nodes = Vec::new();
            builder.build(&mut rows, &mut rng);
            Tree { nodes: std::mem::take(&mut builder.nodes) }
        })
        .collect();
    Ok(RandomForest { trees })
}

/// Random forest as a nuisance model.
pub fn forest_fit(
    z: ArrayView2<f64>,
    y: ArrayView1<f64>,
    params: &ForestParams,
    seed: u64,
) -> Result<NuisanceModel> {
    let forest = fit_forest(z, y, params, seed)?;
    let mtry = params.features_per_split(z.ncols()) as f64;
    Ok(NuisanceModel::new("forest", Box::new(forest))
        .with_hyperparameter("trees", params.trees as f64)
        .with_hyperparameter("mtry", mtry)
        .with_hyperparameter("min_leaf", params.min_leaf as f64))
}
