//! Regression trees grown by exact greedy search on second-order statistics.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::GbtHyper;
use crate::linalg::Matrix;
use crate::rng::Prng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf { weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// `nodes[0]` is the root.
    pub nodes: Vec<Node>,
    /// Features this tree was allowed to split on, ascending.
    pub columns_used: Vec<usize>,
}

impl RegressionTree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { weight } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Row indices sorted by each feature's value (ties by row index).
#[derive(Debug, Clone)]
pub struct SortedColumns {
    order: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(x: &Matrix) -> Self {
        let order = (0..x.cols())
            .map(|f| {
                let mut rows: Vec<u32> = (0..x.rows() as u32).collect();
                rows.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
                rows
            })
            .collect();
        Self { order }
    }
}

/// Features available to one tree: `ceil(colsample · p)` drawn without
/// replacement. With `colsample_bytree = 1` no randomness is consumed.
pub fn sample_columns(n_features: usize, colsample: f64, rng: &mut Prng) -> Vec<usize> {
    let k = ((colsample * n_features as f64).ceil() as usize).clamp(1, n_features);
    if k == n_features {
        return (0..n_features).collect();
    }
    let mut cols = index::sample(rng, n_features, k).into_vec();
    cols.sort_unstable();
    cols
}

/// Grows one tree on the gradient/hessian column of a single class.
pub fn build_tree(x: &Matrix, grad: &[f64], hess: &[f64], h: &GbtHyper, rng: &mut Prng) -> RegressionTree {
    let sorted = SortedColumns::new(x);
    build_tree_presorted(x, &sorted, grad, hess, h, rng)
}

pub(crate) fn build_tree_presorted(
    x: &Matrix,
    sorted: &SortedColumns,
    grad: &[f64],
    hess: &[f64],
    h: &GbtHyper,
    rng: &mut Prng,
) -> RegressionTree {
    assert_eq!(grad.len(), x.rows());
    assert_eq!(hess.len(), x.rows());
    let columns = sample_columns(x.cols(), h.colsample_bytree, rng);
    let lists: Vec<Vec<u32>> = columns.iter().map(|&f| sorted.order[f].clone()).collect();
    let mut grower = Grower {
        x,
        grad,
        hess,
        lambda: h.reg_lambda,
        min_child_weight: h.min_child_weight,
        max_depth: h.max_depth,
        columns: &columns,
        nodes: Vec::new(),
        go_left: vec![false; x.rows()],
    };
    grower.grow(lists, 0);
    RegressionTree {
        nodes: grower.nodes,
        columns_used: columns,
    }
}

/// Best split found for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitCandidate {
    pub slot: usize,
    pub threshold: f64,
    pub gain: f64,
}

struct Grower<'a> {
    x: &'a Matrix,
    grad: &'a [f64],
    hess: &'a [f64],
    lambda: f64,
    min_child_weight: f64,
    max_depth: usize,
    columns: &'a [usize],
    nodes: Vec<Node>,
    go_left: Vec<bool>,
}

#[inline]
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

pub(crate) fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        -g / d
    } else {
        0.0
    }
}

impl Grower<'_> {
    /// `lists[s]` holds this node's rows sorted by feature `columns[s]`.
    fn grow(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> usize {
        let id = self.nodes.len();
        let rows = &lists[0];
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| {
            (g + self.grad[r as usize], h + self.hess[r as usize])
        });
        self.nodes.push(Node::Leaf {
            weight: leaf_weight(g, h, self.lambda),
        });
        if depth >= self.max_depth || rows.len() < 2 {
            return id;
        }
        let Some(best) = self.best_split(&lists, g, h) else {
            return id;
        };

        let feature = self.columns[best.slot];
        for &r in &lists[best.slot] {
            self.go_left[r as usize] = self.x.get(r as usize, feature) < best.threshold;
        }
        let (left_lists, right_lists): (Vec<_>, Vec<_>) = lists
            .into_iter()
            .map(|list| list.into_iter().partition::<Vec<u32>, _>(|&r| self.go_left[r as usize]))
            .unzip();
        let left = self.grow(left_lists, depth + 1);
        let right = self.grow(right_lists, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.gain,
        };
        id
    }

    fn best_split(&self, lists: &[Vec<u32>], g: f64, h: f64) -> Option<SplitCandidate> {
        let parent = score(g, h, self.lambda);
        let mut best: Option<SplitCandidate> = None;
        for (slot, list) in lists.iter().enumerate() {
            let f = self.columns[slot];
            let (mut gl, mut hl) = (0.0, 0.0);
            for w in 0..list.len() - 1 {
                let r = list[w] as usize;
                gl += self.grad[r];
                hl += self.hess[r];
                let v = self.x.get(r, f);
                let next = self.x.get(list[w + 1] as usize, f);
                if !(v < next) {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.min_child_weight || hr < self.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (score(gl, hl, self.lambda) + score(gr, hr, self.lambda) - parent);
                if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        slot,
                        threshold: midpoint(v, next),
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// A threshold strictly above `lo` and at most `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}
