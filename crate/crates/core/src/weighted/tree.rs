//! Weighted decision-tree growing shared by the forest and the booster.
//!
//! Split statistics are accumulated per distinct feature value before the
//! prefix scan, so a row duplicated in the data and a row with doubled
//! weight produce bit-identical trees (x + x is exact in IEEE arithmetic).
//! Ties between splits break toward the lowest feature index, then the
//! lowest threshold.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SplitCriterion {
    /// Weighted Gini impurity decrease (binary labels).
    Gini,
    /// Weighted variance reduction.
    Variance,
}

#[derive(Clone, Debug)]
pub(crate) struct TreeConfig {
    pub max_depth: usize,
    /// Minimum total weight on each side of a split.
    pub min_leaf_weight: f64,
    /// Features tried per node; `None` means all.
    pub mtry: Option<usize>,
    pub criterion: SplitCriterion,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Node {
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

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

struct NodeStats {
    weight: f64,
    weighted_sum: f64,
    weighted_sq: f64,
}

impl NodeStats {
    fn of(rows: &[u32], y: &[f64], w: &[f64]) -> Self {
        let mut s = NodeStats {
            weight: 0.0,
            weighted_sum: 0.0,
            weighted_sq: 0.0,
        };
        for &r in rows {
            let (yi, wi) = (y[r as usize], w[r as usize]);
            s.weight += wi;
            s.weighted_sum += wi * yi;
            s.weighted_sq += wi * yi * yi;
        }
        s
    }

    fn impurity(&self, criterion: SplitCriterion) -> f64 {
        if self.weight <= 0.0 {
            return 0.0;
        }
        match criterion {
            // W * gini = 2 * w1 * (W - w1) / W for labels in {0, 1}
            SplitCriterion::Gini => {
                2.0 * self.weighted_sum * (self.weight - self.weighted_sum) / self.weight
            }
            // weighted sum of squared deviations from the node mean
            SplitCriterion::Variance => {
                self.weighted_sq - self.weighted_sum * self.weighted_sum / self.weight
            }
        }
    }

    fn mean(&self) -> f64 {
        if self.weight > 0.0 {
            self.weighted_sum / self.weight
        } else {
            0.0
        }
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grows a tree over the rows (indices into x, possibly repeated).
pub(crate) fn grow_tree(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    w: &[f64],
    rows: Vec<u32>,
    cfg: &TreeConfig,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut tree = Tree { nodes: Vec::new() };
    grow_node(x, y, w, rows, cfg, rng, 0, &mut tree);
    tree
}

fn grow_node(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    w: &[f64],
    rows: Vec<u32>,
    cfg: &TreeConfig,
    rng: &mut ChaCha8Rng,
    depth: usize,
    tree: &mut Tree,
) -> usize {
    let stats = NodeStats::of(&rows, y, w);
    let leaf = |tree: &mut Tree| {
        tree.nodes.push(Node::Leaf { value: stats.mean() });
        tree.nodes.len() - 1
    };
    if depth >= cfg.max_depth
        || stats.weight < 2.0 * cfg.min_leaf_weight
        || stats.impurity(cfg.criterion) <= 1e-12
    {
        return leaf(tree);
    }

    let d = x.ncols();
    let features: Vec<usize> = match cfg.mtry {
        Some(k) if k < d => {
            let mut all: Vec<usize> = (0..d).collect();
            all.shuffle(rng);
            let mut chosen: Vec<usize> = all.into_iter().take(k).collect();
            chosen.sort_unstable();
            chosen
        }
        _ => (0..d).collect(),
    };

    let parent_impurity = stats.impurity(cfg.criterion);
    let mut best: Option<BestSplit> = None;
    let mut sorted: Vec<u32> = Vec::with_capacity(rows.len());
    for &feature in &features {
        sorted.clear();
        sorted.extend_from_slice(&rows);
        sorted.sort_by(|&a, &b| {
            x[[a as usize, feature]]
                .total_cmp(&x[[b as usize, feature]])
                .then(a.cmp(&b))
        });

        // left-side prefix over groups of equal feature value
        let mut left = NodeStats {
            weight: 0.0,
            weighted_sum: 0.0,
            weighted_sq: 0.0,
        };
        let mut i = 0usize;
        while i < sorted.len() {
            let value = x[[sorted[i] as usize, feature]];
            // accumulate the whole group before evaluating a split
            let mut gw = 0.0;
            let mut gs = 0.0;
            let mut gq = 0.0;
            while i < sorted.len() && x[[sorted[i] as usize, feature]] == value {
                let r = sorted[i] as usize;
                gw += w[r];
                gs += w[r] * y[r];
                gq += w[r] * y[r] * y[r];
                i += 1;
            }
            left.weight += gw;
            left.weighted_sum += gs;
            left.weighted_sq += gq;
            if i >= sorted.len() {
                break;
            }
            let right = NodeStats {
                weight: stats.weight - left.weight,
                weighted_sum: stats.weighted_sum - left.weighted_sum,
                weighted_sq: stats.weighted_sq - left.weighted_sq,
            };
            if left.weight < cfg.min_leaf_weight || right.weight < cfg.min_leaf_weight {
                continue;
            }
            let gain = parent_impurity
                - left.impurity(cfg.criterion)
                - right.impurity(cfg.criterion);
            let next_value = x[[sorted[i] as usize, feature]];
            let threshold = 0.5 * (value + next_value);
            let better = match &best {
                None => gain > 1e-12,
                Some(b) => gain > b.gain + 1e-12,
            };
            if better {
                best = Some(BestSplit {
                    gain,
                    feature,
                    threshold,
                });
            }
        }
    }

    let Some(split) = best else {
        return leaf(tree);
    };
    let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
    for &r in &rows {
        if x[[r as usize, split.feature]] <= split.threshold {
            left_rows.push(r);
        } else {
            right_rows.push(r);
        }
    }
    let at = tree.nodes.len();
    tree.nodes.push(Node::Leaf { value: 0.0 }); // placeholder
    let left = grow_node(x, y, w, left_rows, cfg, rng, depth + 1, tree);
    let right = grow_node(x, y, w, right_rows, cfg, rng, depth + 1, tree);
    tree.nodes[at] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    at
}
