//! Bagged CART trees with per-split feature subsampling.
//!
//! Splits maximise the impurity decrease: within-node variance for a
//! continuous target, Gini impurity for a categorical one. Both reduce to
//! maximising `Σ_children Σ_k s_k² / n_child`, where `s_k` is the child's sum
//! of `y` (continuous) or its class counts (categorical).

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ForestParams, Target};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Mean target (continuous) or share of poor rows (categorical).
        value: f64,
        /// Bootstrap draws that landed in the leaf.
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    /// Times each training row was drawn into this tree's bootstrap sample.
    #[serde(skip)]
    in_bag: Vec<u32>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn in_bag(&self) -> &[u32] {
        &self.in_bag
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
    target: Target,
    n_features: usize,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    target: Target,
    mtry: usize,
    max_depth: usize,
    min_leaf: usize,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    /// Number of sorted samples going left.
    n_left: usize,
    score: f64,
}

impl Builder<'_> {
    /// Σ_k s_k² / n for the node statistic of `idx`.
    fn node_score(&self, idx: &[usize]) -> f64 {
        let n = idx.len() as f64;
        let s: f64 = idx.iter().map(|&i| self.y[i]).sum();
        match self.target {
            Target::Continuous => s * s / n,
            Target::Categorical => (s * s + (n - s) * (n - s)) / n,
        }
    }

    fn best_split_on(&self, feature: usize, idx: &mut [usize]) -> Option<SplitChoice> {
        let x = self.x;
        idx.sort_unstable_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)));
        let n = idx.len();
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let mut left = 0.0;
        let mut best: Option<SplitChoice> = None;
        for k in 1..n {
            left += self.y[idx[k - 1]];
            let (lo, hi) = (x.get(idx[k - 1], feature), x.get(idx[k], feature));
            if lo == hi || k < self.min_leaf || n - k < self.min_leaf {
                continue;
            }
            let (nl, nr) = (k as f64, (n - k) as f64);
            let right = total - left;
            let score = match self.target {
                Target::Continuous => left * left / nl + right * right / nr,
                Target::Categorical => {
                    (left * left + (nl - left) * (nl - left)) / nl + (right * right + (nr - right) * (nr - right)) / nr
                }
            };
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(SplitChoice {
                    feature,
                    threshold: 0.5 * (lo + hi),
                    n_left: k,
                    score,
                });
            }
        }
        best
    }

    fn leaf(&self, idx: &[usize]) -> Node {
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        Node::Leaf {
            value,
            count: idx.len(),
        }
    }

    fn build(&self, sample: Vec<usize>, rng: &mut rng::Rng) -> Vec<Node> {
        let p = self.x.cols();
        let mut nodes: Vec<Node> = Vec::new();
        // (node slot, sample indices, depth)
        let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        nodes.push(Node::Leaf { value: 0.0, count: 0 });
        stack.push((0, sample, 0));
        let mut features: Vec<usize> = (0..p).collect();

        while let Some((slot, mut idx, depth)) = stack.pop() {
            let pure = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
            let depth_capped = self.max_depth > 0 && depth >= self.max_depth;
            if pure || depth_capped || idx.len() < 2 * self.min_leaf {
                nodes[slot] = self.leaf(&idx);
                continue;
            }
            let parent = self.node_score(&idx);
            features.shuffle(rng);
            let mut tried = 0;
            let mut best: Option<SplitChoice> = None;
            for &f in &features {
                if tried == self.mtry {
                    break;
                }
                let first = self.x.get(idx[0], f);
                if idx.iter().all(|&i| self.x.get(i, f) == first) {
                    continue;
                }
                tried += 1;
                if let Some(c) = self.best_split_on(f, &mut idx) {
                    if best.as_ref().is_none_or(|b| c.score > b.score) {
                        best = Some(c);
                    }
                }
            }
            match best {
                Some(c) if c.score > parent * (1.0 + 1e-12) => {
                    self.best_split_on(c.feature, &mut idx);
                    let right_idx = idx.split_off(c.n_left);
                    let (l, r) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { value: 0.0, count: 0 });
                    nodes.push(Node::Leaf { value: 0.0, count: 0 });
                    nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: l,
                        right: r,
                    };
                    stack.push((r, right_idx, depth + 1));
                    stack.push((l, idx, depth + 1));
                }
                _ => nodes[slot] = self.leaf(&idx),
            }
        }
        nodes
    }
}

impl Forest {
    pub fn fit(x: &Matrix, y: &[f64], target: Target, params: &ForestParams, seed: u64) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if params.trees == 0 {
            return Err(Error::Spec("random forest needs at least one tree".into()));
        }
        if params.min_leaf == 0 {
            return Err(Error::Spec("min_leaf must be at least 1".into()));
        }
        let mtry = params
            .mtry
            .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
            .clamp(1, p.max(1));
        let builder = Builder {
            x,
            y,
            target,
            mtry,
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
        };
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::stream(rng::derive(seed, t as u64));
                let mut in_bag = vec![0u32; n];
                let sample: Vec<usize> = (0..n)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        in_bag[i] += 1;
                        i
                    })
                    .collect();
                Tree {
                    nodes: builder.build(sample, &mut rng),
                    in_bag,
                }
            })
            .collect();
        Ok(Forest {
            trees,
            target,
            n_features: p,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean of tree predictions: the average leaf mean for a continuous
    /// target, the average leaf share of poor rows for a categorical one.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        debug_assert_eq!(x.cols(), self.n_features);
        (0..x.rows()).map(|r| self.predict_row(x.row(r))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(trees: usize) -> ForestParams {
        ForestParams {
            trees,
            mtry: None,
            max_depth: 0,
            min_leaf: 1,
        }
    }

    #[test]
    fn depth_cap_is_respected() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y: Vec<f64> = (0..200).map(|i| ((i * 31) % 17) as f64).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let mut p = params(5);
        p.max_depth = 3;
        let f = Forest::fit(&x, &y, Target::Continuous, &p, 1).unwrap();
        assert!(f.trees().iter().all(|t| t.depth() <= 3));
    }

    #[test]
    fn min_leaf_bounds_leaf_counts() {
        let rows: Vec<Vec<f64>> = (0..300).map(|i| vec![(i as f64).sin(), (i % 5) as f64]).collect();
        let y: Vec<f64> = (0..300)
            .map(|i| if (i as f64).sin() > 0.2 { 1.0 } else { 0.0 })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let mut p = params(4);
        p.min_leaf = 10;
        let f = Forest::fit(&x, &y, Target::Categorical, &p, 9).unwrap();
        for t in f.trees() {
            for node in t.nodes() {
                if let Node::Leaf { count, .. } = node {
                    assert!(*count >= 10);
                }
            }
        }
    }

    #[test]
    fn categorical_predictions_are_probabilities() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 10) as f64]).collect();
        let y: Vec<f64> = (0..100).map(|i| ((i * 13) % 3 == 0) as u8 as f64).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let f = Forest::fit(&x, &y, Target::Categorical, &params(10), 3).unwrap();
        assert!(f.predict(&x).iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn zero_trees_rejected() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(Forest::fit(&x, &[0.0, 1.0], Target::Continuous, &params(0), 0).is_err());
    }
}
