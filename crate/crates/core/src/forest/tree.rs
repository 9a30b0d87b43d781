//! CART growth: greedy best-split search with mtry feature subsampling.

use rand::seq::index::sample as index_sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sample::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf { value: LeafValue },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LeafValue {
    /// Regression leaf: mean response of the training rows it holds.
    Mean(f64),
    /// Classification leaf: class distribution, sums to 1.
    Distribution(Vec<f64>),
}

impl TreeNode {
    /// Rows with value <= threshold go left, > threshold go right.
    pub fn predict(&self, features: &[f64]) -> &LeafValue {
        match self {
            TreeNode::Leaf { value } => value,
            TreeNode::Split { feature, threshold, left, right } => {
                if features[*feature] <= *threshold {
                    left.predict(features)
                } else {
                    right.predict(features)
                }
            }
        }
    }
}

/// Per-row training view shared by all nodes of one tree.
pub struct GrowContext<'a> {
    pub features: &'a [Vec<f64>],
    pub responses: &'a [f64],
    pub task: Task,
    pub n_classes: usize,
    pub n_features: usize,
    pub mtry: usize,
    pub min_node_size: usize,
}

#[derive(Clone, Copy)]
struct SplitChoice {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

/// Grow a tree over `rows` (indices into the context, repeats allowed for
/// bootstrap samples). `importance` accumulates impurity decreases by
/// feature.
pub fn grow(
    ctx: &GrowContext,
    rows: &[usize],
    rng: &mut ChaCha8Rng,
    importance: &mut [f64],
) -> TreeNode {
    let impurity = node_impurity(ctx, rows);
    if rows.len() <= ctx.min_node_size || impurity <= 0.0 {
        return leaf(ctx, rows);
    }

    let candidates = if ctx.mtry >= ctx.n_features {
        (0..ctx.n_features).collect::<Vec<usize>>()
    } else {
        let mut drawn = index_sample(rng, ctx.n_features, ctx.mtry).into_vec();
        // Canonical order so the chosen split is independent of draw order.
        drawn.sort_unstable();
        drawn
    };

    let mut best: Option<SplitChoice> = None;
    for &feature in &candidates {
        if let Some(choice) = best_split_on_feature(ctx, rows, feature, impurity) {
            best = match best {
                None => Some(choice),
                Some(current) if better(choice, current) => Some(choice),
                other => other,
            };
        }
    }

    let Some(split) = best else { return leaf(ctx, rows) };
    importance[split.feature] += split.decrease;

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| ctx.features[r][split.feature] <= split.threshold);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(ctx, &left_rows, rng, importance)),
        right: Box::new(grow(ctx, &right_rows, rng, importance)),
    }
}

/// Ties in impurity decrease resolve toward the lower feature index, then
/// the lower threshold; required for determinism.
fn better(candidate: SplitChoice, current: SplitChoice) -> bool {
    if candidate.decrease != current.decrease {
        return candidate.decrease > current.decrease;
    }
    if candidate.feature != current.feature {
        return candidate.feature < current.feature;
    }
    candidate.threshold < current.threshold
}

fn leaf(ctx: &GrowContext, rows: &[usize]) -> TreeNode {
    match ctx.task {
        Task::Regression => {
            let mean = rows.iter().map(|&r| ctx.responses[r]).sum::<f64>() / rows.len() as f64;
            TreeNode::Leaf { value: LeafValue::Mean(mean) }
        }
        Task::Classification => {
            let mut counts = vec![0.0f64; ctx.n_classes];
            for &r in rows {
                counts[ctx.responses[r] as usize] += 1.0;
            }
            let total = rows.len() as f64;
            for c in &mut counts {
                *c /= total;
            }
            TreeNode::Leaf { value: LeafValue::Distribution(counts) }
        }
    }
}

/// Node impurity scaled by the node size: n*gini for classification,
/// sum of squared errors for regression. Zero means pure.
fn node_impurity(ctx: &GrowContext, rows: &[usize]) -> f64 {
    match ctx.task {
        Task::Classification => {
            let mut counts = vec![0.0f64; ctx.n_classes];
            for &r in rows {
                counts[ctx.responses[r] as usize] += 1.0;
            }
            let n = rows.len() as f64;
            n * (1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>())
        }
        Task::Regression => {
            let n = rows.len() as f64;
            let sum: f64 = rows.iter().map(|&r| ctx.responses[r]).sum();
            let sum_sq: f64 = rows.iter().map(|&r| ctx.responses[r].powi(2)).sum();
            (sum_sq - sum * sum / n).max(0.0)
        }
    }
}

/// Best threshold for one feature, or None when all values are equal or no
/// split strictly decreases impurity. Thresholds sit at the midpoint
/// between consecutive distinct sorted values.
fn best_split_on_feature(
    ctx: &GrowContext,
    rows: &[usize],
    feature: usize,
    parent_impurity: f64,
) -> Option<SplitChoice> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| {
        ctx.features[a][feature]
            .partial_cmp(&ctx.features[b][feature])
            .expect("finite feature values")
            .then(a.cmp(&b))
    });

    let n = order.len();
    let mut best: Option<SplitChoice> = None;

    match ctx.task {
        Task::Classification => {
            let mut total = vec![0.0f64; ctx.n_classes];
            for &r in &order {
                total[ctx.responses[r] as usize] += 1.0;
            }
            let mut left = vec![0.0f64; ctx.n_classes];
            for i in 0..n - 1 {
                left[ctx.responses[order[i]] as usize] += 1.0;
                let v = ctx.features[order[i]][feature];
                let next = ctx.features[order[i + 1]][feature];
                if v == next {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = (n - i - 1) as f64;
                let gini_l = nl * (1.0 - left.iter().map(|c| (c / nl).powi(2)).sum::<f64>());
                let gini_r = nr
                    * (1.0
                        - left
                            .iter()
                            .zip(&total)
                            .map(|(l, t)| ((t - l) / nr).powi(2))
                            .sum::<f64>());
                let decrease = parent_impurity - gini_l - gini_r;
                consider(&mut best, feature, midpoint(v, next), decrease);
            }
        }
        Task::Regression => {
            let total_sum: f64 = order.iter().map(|&r| ctx.responses[r]).sum();
            let total_sq: f64 = order.iter().map(|&r| ctx.responses[r].powi(2)).sum();
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for i in 0..n - 1 {
                let y = ctx.responses[order[i]];
                left_sum += y;
                left_sq += y * y;
                let v = ctx.features[order[i]][feature];
                let next = ctx.features[order[i + 1]][feature];
                if v == next {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = (n - i - 1) as f64;
                let sse_l = (left_sq - left_sum * left_sum / nl).max(0.0);
                let right_sum = total_sum - left_sum;
                let sse_r = ((total_sq - left_sq) - right_sum * right_sum / nr).max(0.0);
                let decrease = parent_impurity - sse_l - sse_r;
                consider(&mut best, feature, midpoint(v, next), decrease);
            }
        }
    }
    best
}

fn consider(best: &mut Option<SplitChoice>, feature: usize, threshold: f64, decrease: f64) {
    if decrease <= 0.0 {
        return;
    }
    let candidate = SplitChoice { feature, threshold, decrease };
    *best = match *best {
        None => Some(candidate),
        Some(current) if better(candidate, current) => Some(candidate),
        other => other,
    };
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    // Guard against rounding out of the open interval (a, b].
    if mid <= a {
        b
    } else {
        mid
    }
}
