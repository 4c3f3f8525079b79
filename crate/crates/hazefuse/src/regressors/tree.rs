//! CART regression tree with greedy variance-reduction splits.
//!
//! Split candidates are midpoints between consecutive distinct sorted feature
//! values. The split score maximizes `S_L²/n_L + S_R²/n_R` (equivalent to
//! minimizing the summed child SSE); ties break toward the lowest feature
//! index, then the lowest threshold, so fitting is deterministic given the
//! data and the per-split feature pool.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_targets, FeatureMatrix, FeatureSubsample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted binary regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
    n_features: usize,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Minimum and maximum leaf value.
    pub fn leaf_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for n in &self.nodes {
            if let TreeNode::Leaf { value } = n {
                lo = lo.min(*value);
                hi = hi.max(*value);
            }
        }
        (lo, hi)
    }
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

/// Search the best split of `indices` over `features`. Returns `None` when no
/// candidate leaves `min_leaf` samples on both sides.
fn best_split(
    x: &FeatureMatrix,
    y: &[f64],
    indices: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<BestSplit> {
    let n = indices.len();
    if n < 2 * min_leaf {
        return None;
    }
    let mut best: Option<BestSplit> = None;
    let mut sorted: Vec<usize> = Vec::with_capacity(n);

    for &f in features {
        sorted.clear();
        sorted.extend_from_slice(indices);
        sorted.sort_by(|&a, &b| {
            x.value(a, f)
                .partial_cmp(&x.value(b, f))
                .expect("features are finite")
                .then(a.cmp(&b))
        });

        let total: f64 = sorted.iter().map(|&i| y[i]).sum();
        let mut left_sum = 0.0;
        for k in 1..n {
            left_sum += y[sorted[k - 1]];
            if k < min_leaf || n - k < min_leaf {
                continue;
            }
            let lo = x.value(sorted[k - 1], f);
            let hi = x.value(sorted[k], f);
            if lo == hi {
                continue;
            }
            let threshold = (lo + hi) / 2.0;
            let right_sum = total - left_sum;
            let score =
                left_sum * left_sum / k as f64 + right_sum * right_sum / (n - k) as f64;
            let better = match &best {
                None => true,
                Some(b) => score > b.score,
            };
            if better {
                best = Some(BestSplit {
                    score,
                    feature: f,
                    threshold,
                });
            }
        }
    }
    best
}

fn leaf_value(y: &[f64], indices: &[usize]) -> f64 {
    indices.iter().map(|&i| y[i]).sum::<f64>() / indices.len() as f64
}

fn is_pure(y: &[f64], indices: &[usize]) -> bool {
    let first = y[indices[0]];
    indices.iter().all(|&i| y[i] == first)
}

pub(super) fn fit_tree_impl(
    x: &FeatureMatrix,
    y: &[f64],
    params: &TreeParams,
    subsample: FeatureSubsample,
    rng: Option<&mut ChaCha8Rng>,
    indices: Vec<usize>,
) -> Result<RegressionTree> {
    if indices.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if params.min_samples_leaf == 0 {
        return Err(Error::InvalidConfig("min_samples_leaf must be >= 1".into()));
    }
    let p = x.n_cols();
    let all_features: Vec<usize> = (0..p).collect();
    let sqrt_count = (p as f64).sqrt().ceil() as usize;
    let mut rng = rng;

    let mut nodes: Vec<TreeNode> = Vec::new();
    // stack of (node slot, sample indices, depth); children fill their slot
    let mut work: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    nodes.push(TreeNode::Leaf { value: 0.0 });
    work.push((0, indices, 0));

    while let Some((slot, idx, depth)) = work.pop() {
        let at_depth_limit = params.max_depth.map(|d| depth >= d).unwrap_or(false);
        let splittable =
            !at_depth_limit && idx.len() >= 2 * params.min_samples_leaf && !is_pure(y, &idx);

        let chosen = if splittable {
            let pool: Vec<usize> = match (subsample, rng.as_deref_mut()) {
                (FeatureSubsample::All, _) | (_, None) => all_features.clone(),
                (FeatureSubsample::Sqrt, Some(rng)) => {
                    let mut picked = sample_without_replacement(p, sqrt_count.min(p), rng);
                    picked.sort_unstable();
                    picked
                }
            };
            best_split(x, y, &idx, &pool, params.min_samples_leaf)
        } else {
            None
        };

        match chosen {
            None => {
                nodes[slot] = TreeNode::Leaf {
                    value: leaf_value(y, &idx),
                };
            }
            Some(split) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| x.value(i, split.feature) <= split.threshold);
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                let right = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes[slot] = TreeNode::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left,
                    right,
                };
                // right first so the left subtree is processed (and any rng
                // consumed) in left-to-right order
                work.push((right, right_idx, depth + 1));
                work.push((left, left_idx, depth + 1));
            }
        }
    }

    Ok(RegressionTree {
        nodes,
        n_features: p,
    })
}

/// `count` distinct values from `0..n`, via partial Fisher-Yates.
fn sample_without_replacement(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::Rng;
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Fit a tree on all rows with every feature available at every split.
pub fn fit_tree(x: &FeatureMatrix, y: &[f64], params: &TreeParams) -> Result<RegressionTree> {
    check_targets(x, y, 1)?;
    fit_tree_impl(
        x,
        y,
        params,
        FeatureSubsample::All,
        None,
        (0..x.n_rows()).collect(),
    )
}
