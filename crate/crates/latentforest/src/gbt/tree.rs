//! Axis-aligned binary trees with exact greedy split search.
//!
//! Both tree kinds run over per-feature row lists kept sorted by feature
//! value: the lists are built once per ensemble, then partitioned on the
//! way down, so one tree costs O(depth * features * rows). Equal-gain
//! splits resolve to the lowest feature index, then the lowest threshold.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

/// Row ids per feature, sorted by feature value (ties by row id). Shared
/// read-only by every tree of an ensemble.
pub struct SortedFeatures {
    pub order: Vec<Vec<u32>>,
}

impl SortedFeatures {
    pub fn new(x: &Matrix) -> Self {
        let order = (0..x.cols())
            .map(|j| {
                let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
                idx.sort_unstable_by(|&a, &b| {
                    x[(a as usize, j)]
                        .partial_cmp(&x[(b as usize, j)])
                        .unwrap()
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        SortedFeatures { order }
    }

    /// Restrict to a row multiset given by per-row multiplicities
    /// (bootstrap resampling keeps duplicates adjacent, which the split
    /// scan handles naturally).
    pub fn restrict(&self, counts: &[u32]) -> Vec<Vec<u32>> {
        self.order
            .iter()
            .map(|list| {
                let mut out = Vec::new();
                for &id in list {
                    for _ in 0..counts[id as usize] {
                        out.push(id);
                    }
                }
                out
            })
            .collect()
    }
}

/// Settings shared by the regression-tree builders.
pub struct RegTreeParams {
    pub max_depth: usize,
    /// Minimum hessian mass per child; with unit hessians this is the
    /// minimum sample count per leaf.
    pub min_child_weight: f64,
    /// Leaf value is G / (H + lambda).
    pub leaf_lambda: f64,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn leaf_value(sum_g: f64, sum_h: f64, lambda: f64) -> f64 {
    if sum_h + lambda == 0.0 {
        0.0
    } else {
        sum_g / (sum_h + lambda)
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda == 0.0 {
        0.0
    } else {
        g * g / (h + lambda)
    }
}

/// Fit a regression tree on gradient/hessian pairs. With unit hessians
/// and `leaf_lambda = 0` this is a plain squared-error tree whose leaves
/// hold the mean target.
pub fn fit_regression_tree(
    x: &Matrix,
    grad: &[f64],
    hess: &[f64],
    lists: &[Vec<u32>],
    params: &RegTreeParams,
) -> Node {
    let sum_g: f64 = lists[0].iter().map(|&i| grad[i as usize]).sum();
    let sum_h: f64 = lists[0].iter().map(|&i| hess[i as usize]).sum();
    build_reg_node(x, grad, hess, lists, params, 0, sum_g, sum_h)
}

#[allow(clippy::too_many_arguments)]
fn build_reg_node(
    x: &Matrix,
    grad: &[f64],
    hess: &[f64],
    lists: &[Vec<u32>],
    params: &RegTreeParams,
    depth: usize,
    sum_g: f64,
    sum_h: f64,
) -> Node {
    let n_node = lists[0].len();
    if depth >= params.max_depth || n_node < 2 || sum_h < 2.0 * params.min_child_weight {
        return Node::Leaf {
            value: leaf_value(sum_g, sum_h, params.leaf_lambda),
        };
    }

    let parent_score = score(sum_g, sum_h, params.leaf_lambda);
    let mut best: Option<BestSplit> = None;
    for (feature, list) in lists.iter().enumerate() {
        let mut gl = 0.0;
        let mut hl = 0.0;
        for w in 0..n_node - 1 {
            let id = list[w] as usize;
            gl += grad[id];
            hl += hess[id];
            let here = x[(id, feature)];
            let next = x[(list[w + 1] as usize, feature)];
            if here == next {
                continue;
            }
            let hr = sum_h - hl;
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = score(gl, hl, params.leaf_lambda)
                + score(sum_g - gl, hr, params.leaf_lambda)
                - parent_score;
            if gain > 0.0 && best.as_ref().map_or(true, |b| gain > b.gain) {
                let threshold = 0.5 * (here + next);
                // Guard against midpoint collapsing onto the lower value
                // for adjacent floats; the comparison is `value < t`.
                let threshold = if threshold > here { threshold } else { next };
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }

    let Some(split) = best else {
        return Node::Leaf {
            value: leaf_value(sum_g, sum_h, params.leaf_lambda),
        };
    };

    let (left_lists, right_lists) = partition(x, lists, split.feature, split.threshold);
    let (gl, hl) = left_lists[0]
        .iter()
        .fold((0.0, 0.0), |(g, h), &i| (g + grad[i as usize], h + hess[i as usize]));
    let left = build_reg_node(x, grad, hess, &left_lists, params, depth + 1, gl, hl);
    let right = build_reg_node(
        x,
        grad,
        hess,
        &right_lists,
        params,
        depth + 1,
        sum_g - gl,
        sum_h - hl,
    );
    Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Settings for gini classification trees (random forest members).
pub struct ClsTreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features scored per node; all features are still partitioned.
    pub max_features: usize,
}

/// Fit a gini-impurity classification tree over binary labels; leaves
/// store the majority label (ties toward 0) as 0.0 or 1.0.
pub fn fit_classification_tree(
    x: &Matrix,
    y: &[u8],
    lists: &[Vec<u32>],
    params: &ClsTreeParams,
    rng: &mut ChaCha8Rng,
) -> Node {
    let ones: u64 = lists[0].iter().map(|&i| y[i as usize] as u64).sum();
    build_cls_node(x, y, lists, params, rng, 0, ones)
}

fn majority(ones: u64, total: usize) -> f64 {
    if (ones as usize) * 2 > total {
        1.0
    } else {
        0.0
    }
}

fn gini_score(c0: f64, c1: f64) -> f64 {
    let n = c0 + c1;
    if n == 0.0 {
        0.0
    } else {
        (c0 * c0 + c1 * c1) / n
    }
}

fn build_cls_node(
    x: &Matrix,
    y: &[u8],
    lists: &[Vec<u32>],
    params: &ClsTreeParams,
    rng: &mut ChaCha8Rng,
    depth: usize,
    ones: u64,
) -> Node {
    let n_node = lists[0].len();
    let pure = ones == 0 || ones as usize == n_node;
    if depth >= params.max_depth || n_node < params.min_samples_split || pure {
        return Node::Leaf {
            value: majority(ones, n_node),
        };
    }

    let n_features = lists.len();
    let k = params.max_features.min(n_features).max(1);
    let mut candidates: Vec<usize> = if k == n_features {
        (0..n_features).collect()
    } else {
        sample(rng, n_features, k).into_iter().collect()
    };
    candidates.sort_unstable();

    let c1 = ones as f64;
    let c0 = n_node as f64 - c1;
    let parent = gini_score(c0, c1);
    let min_leaf = params.min_samples_leaf.max(1);

    let mut best: Option<BestSplit> = None;
    for &feature in &candidates {
        let list = &lists[feature];
        let mut l1 = 0.0;
        let mut l0 = 0.0;
        for w in 0..n_node - 1 {
            let id = list[w] as usize;
            if y[id] == 1 {
                l1 += 1.0;
            } else {
                l0 += 1.0;
            }
            let here = x[(id, feature)];
            let next = x[(list[w + 1] as usize, feature)];
            if here == next {
                continue;
            }
            let n_left = w + 1;
            let n_right = n_node - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let gain = gini_score(l0, l1) + gini_score(c0 - l0, c1 - l1) - parent;
            if gain > 0.0 && best.as_ref().map_or(true, |b| gain > b.gain) {
                let threshold = 0.5 * (here + next);
                let threshold = if threshold > here { threshold } else { next };
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }

    let Some(split) = best else {
        return Node::Leaf {
            value: majority(ones, n_node),
        };
    };

    let (left_lists, right_lists) = partition(x, lists, split.feature, split.threshold);
    let left_ones: u64 = left_lists[0].iter().map(|&i| y[i as usize] as u64).sum();
    let left = build_cls_node(x, y, &left_lists, params, rng, depth + 1, left_ones);
    let right = build_cls_node(
        x,
        y,
        &right_lists,
        params,
        rng,
        depth + 1,
        ones - left_ones,
    );
    Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Stable-partition every feature list on `x[:, feature] < threshold`,
/// preserving each list's sorted order on both sides.
fn partition(
    x: &Matrix,
    lists: &[Vec<u32>],
    feature: usize,
    threshold: f64,
) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let mut left = Vec::with_capacity(lists.len());
    let mut right = Vec::with_capacity(lists.len());
    for list in lists {
        let mut l = Vec::new();
        let mut r = Vec::new();
        for &id in list {
            if x[(id as usize, feature)] < threshold {
                l.push(id);
            } else {
                r.push(id);
            }
        }
        left.push(l);
        right.push(r);
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn single_split_tree_is_piecewise_constant() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.25], vec![0.75], vec![1.0]]);
        let y = [-1.0, -1.0, 1.0, 1.0];
        let sorted = SortedFeatures::new(&x);
        let tree = fit_regression_tree(
            &x,
            &y,
            &[1.0; 4],
            &sorted.order,
            &RegTreeParams {
                max_depth: 1,
                min_child_weight: 1.0,
                leaf_lambda: 0.0,
            },
        );
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.predict_row(&[0.1]), -1.0);
        assert_eq!(tree.predict_row(&[0.9]), 1.0);
        match &tree {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 0.5),
            Node::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn leaves_cover_training_rows_with_constant_values() {
        let x = Matrix::from_rows(&[
            vec![0.0, 3.0],
            vec![1.0, 2.0],
            vec![2.0, 1.0],
            vec![3.0, 0.0],
            vec![4.0, 5.0],
            vec![5.0, 4.0],
        ]);
        let y = [0.0, 0.5, 1.0, 1.5, 4.0, 4.5];
        let sorted = SortedFeatures::new(&x);
        let tree = fit_regression_tree(
            &x,
            &y,
            &[1.0; 6],
            &sorted.order,
            &RegTreeParams {
                max_depth: 8,
                min_child_weight: 1.0,
                leaf_lambda: 0.0,
            },
        );
        // every row lands in a leaf whose value is the mean of the rows
        // routed there; with depth 8 and distinct values each row is alone
        for i in 0..6 {
            assert_eq!(tree.predict_row(x.row(i)), y[i]);
        }
        assert_eq!(tree.leaf_count(), 6);
    }

    #[test]
    fn tie_break_prefers_lowest_feature() {
        // identical split structure available on both features
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let y = [0.0, 1.0];
        let sorted = SortedFeatures::new(&x);
        let tree = fit_regression_tree(
            &x,
            &y,
            &[1.0; 2],
            &sorted.order,
            &RegTreeParams {
                max_depth: 1,
                min_child_weight: 1.0,
                leaf_lambda: 0.0,
            },
        );
        match tree {
            Node::Split { feature, .. } => assert_eq!(feature, 0),
            Node::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn classification_tree_separates_labels() {
        let x = Matrix::from_rows(&[
            vec![0.0],
            vec![0.1],
            vec![0.2],
            vec![0.9],
            vec![1.0],
            vec![1.1],
        ]);
        let y = [0, 0, 0, 1, 1, 1];
        let sorted = SortedFeatures::new(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = fit_classification_tree(
            &x,
            &y,
            &sorted.order,
            &ClsTreeParams {
                max_depth: 64,
                min_samples_split: 2,
                min_samples_leaf: 1,
                max_features: 1,
            },
            &mut rng,
        );
        for i in 0..6 {
            assert_eq!(tree.predict_row(x.row(i)), y[i] as f64);
        }
    }
}
