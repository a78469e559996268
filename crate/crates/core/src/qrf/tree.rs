//! CART regression trees grown on bootstrap samples.
//!
//! Splits minimize the summed squared error of the two children, searched
//! over a random subset of `mtry` features with midpoint thresholds between
//! consecutive distinct values. A node becomes a leaf when its bootstrap
//! sample is smaller than `min_n`, its targets are (numerically) constant,
//! or no split improves on it. Ties prefer the lowest feature index, then
//! the lowest threshold, so growth is fully deterministic given the seed.
//!
//! After growth the leaves are populated according to the configured
//! [`WeightBasis`]: by default the **full** training set is routed down the
//! tree, so that leaf membership (and with it the observation weights of the
//! forest) covers every training row; alternatively the leaves keep the
//! bootstrap draw itself, duplicates included.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which rows populate the leaves once a tree is grown. This is what the
/// observation weights, and with them every quantile, are computed over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightBasis {
    /// Every training row, routed through the finished tree.
    #[default]
    FullTrainingSet,
    /// Only the tree's own bootstrap draw, with multiplicity.
    BootstrapSample,
}

/// One node of a regression tree, indexing into the tree's node arena.
/// Routing sends `x[feature] < threshold` to the left child.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: usize,
    },
}

/// A grown tree: a node arena plus, per leaf, the training rows that route
/// to it. Leaf ids are dense and assigned in depth-first (left first) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
    pub leaf_members: Vec<Vec<u32>>,
    pub seed: u64,
}

impl RegressionTree {
    /// Leaf index the vector `x` routes to.
    pub fn leaf_of(&self, x: &[f64]) -> usize {
        self.leaf_by(|f| x[f])
    }

    fn leaf_by(&self, get: impl Fn(usize) -> f64) -> usize {
        let mut node = 0usize;
        loop {
            match self.nodes[node] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if get(feature) < threshold { left } else { right };
                }
                TreeNode::Leaf { leaf } => return leaf,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_members.len()
    }
}

/// Column-major view of the training features; shared by all trees of a fit.
pub(crate) struct FeatureMatrix {
    pub cols: Vec<Vec<f64>>,
    pub n_rows: usize,
}

impl FeatureMatrix {
    pub fn from_rows<'a, I>(rows: I, width: usize) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); width];
        let mut n_rows = 0;
        for row in rows {
            debug_assert_eq!(row.len(), width);
            for (c, v) in row.iter().enumerate() {
                cols[c].push(*v);
            }
            n_rows += 1;
        }
        FeatureMatrix { cols, n_rows }
    }
}

/// Grows one tree on a bootstrap sample of the rows of `x`.
pub(crate) fn grow_tree(
    x: &FeatureMatrix,
    y: &[f64],
    mtry: usize,
    min_n: usize,
    basis: WeightBasis,
    seed: u64,
) -> RegressionTree {
    let n = x.n_rows;
    let p = x.cols.len();
    debug_assert!(n > 0 && p > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root_members: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n as u32)).collect();

    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { leaf: 0 }];
    let mut n_leaves = 0usize;
    let mut bootstrap_leaves: Vec<Vec<u32>> = Vec::new();
    let mut stack: Vec<(usize, Vec<u32>)> = vec![(0, root_members)];
    let feat_template: Vec<u32> = (0..p as u32).collect();
    let mut feats = feat_template.clone();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let k = mtry.min(p);

    while let Some((slot, members)) = stack.pop() {
        let m = members.len();
        let mut sum = 0.0;
        for &i in &members {
            sum += y[i as usize];
        }
        let mean = sum / m as f64;
        let mut sse = 0.0;
        for &i in &members {
            let d = y[i as usize] - mean;
            sse += d * d;
        }

        // gain, feature, threshold
        let mut best: Option<(f64, usize, f64)> = None;
        if m >= min_n && sse > 1e-12 * (1.0 + mean * mean) * m as f64 {
            feats.copy_from_slice(&feat_template);
            for i in 0..k {
                let j = rng.gen_range(i..p);
                feats.swap(i, j);
            }
            let mut sampled = feats[..k].to_vec();
            sampled.sort_unstable();

            for &f in &sampled {
                let col = &x.cols[f as usize];
                pairs.clear();
                pairs.extend(
                    members
                        .iter()
                        .map(|&i| (col[i as usize], y[i as usize] - mean)),
                );
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                if pairs[0].0 == pairs[m - 1].0 {
                    continue;
                }
                let total: f64 = pairs.iter().map(|p| p.1).sum();
                let mut left_sum = 0.0;
                for i in 0..m - 1 {
                    left_sum += pairs[i].1;
                    if pairs[i].0 == pairs[i + 1].0 {
                        continue;
                    }
                    let threshold = 0.5 * pairs[i].0 + 0.5 * pairs[i + 1].0;
                    // Adjacent floats can collapse the midpoint onto the left
                    // value; such a threshold cannot separate the two.
                    if threshold <= pairs[i].0 {
                        continue;
                    }
                    let n_l = (i + 1) as f64;
                    let n_r = (m - i - 1) as f64;
                    let right_sum = total - left_sum;
                    let gain = left_sum * left_sum / n_l + right_sum * right_sum / n_r;
                    if best.is_none_or(|(g, _, _)| gain > g) {
                        best = Some((gain, f as usize, threshold));
                    }
                }
            }
            if let Some((gain, _, _)) = best {
                if gain <= 1e-12 * (1.0 + sse) {
                    best = None;
                }
            }
        }

        match best {
            Some((_, feature, threshold)) => {
                let mut left = Vec::new();
                let mut right = Vec::new();
                for &i in &members {
                    if x.cols[feature][i as usize] < threshold {
                        left.push(i);
                    } else {
                        right.push(i);
                    }
                }
                debug_assert!(!left.is_empty() && !right.is_empty());
                let left_slot = nodes.len();
                nodes.push(TreeNode::Leaf { leaf: 0 });
                let right_slot = nodes.len();
                nodes.push(TreeNode::Leaf { leaf: 0 });
                nodes[slot] = TreeNode::Split {
                    feature,
                    threshold,
                    left: left_slot,
                    right: right_slot,
                };
                stack.push((right_slot, right));
                stack.push((left_slot, left));
            }
            None => {
                nodes[slot] = TreeNode::Leaf { leaf: n_leaves };
                n_leaves += 1;
                if basis == WeightBasis::BootstrapSample {
                    let mut draw = members;
                    draw.sort_unstable();
                    bootstrap_leaves.push(draw);
                }
            }
        }
    }

    let mut tree = RegressionTree {
        nodes,
        leaf_members: bootstrap_leaves,
        seed,
    };
    if basis == WeightBasis::FullTrainingSet {
        tree.leaf_members = vec![Vec::new(); n_leaves];
        for row in 0..n {
            let leaf = tree.leaf_by(|f| x.cols[f][row]);
            tree.leaf_members[leaf].push(row as u32);
        }
    }
    tree
}
