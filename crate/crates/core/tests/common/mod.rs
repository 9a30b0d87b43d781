//! Reference implementations shared by the oracle test targets. These are
//! written for clarity, not speed: every candidate split is evaluated by
//! re-partitioning the rows from scratch.

use spatialcv::sample::{SampleTable, Task};

pub enum RefNode {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<RefNode>, right: Box<RefNode> },
}

impl RefNode {
    pub fn predict(&self, features: &[f64]) -> f64 {
        match self {
            RefNode::Leaf(v) => *v,
            RefNode::Split { feature, threshold, left, right } => {
                if features[*feature] <= *threshold {
                    left.predict(features)
                } else {
                    right.predict(features)
                }
            }
        }
    }
}

fn impurity(task: Task, n_classes: usize, responses: &[f64]) -> f64 {
    let n = responses.len() as f64;
    match task {
        Task::Classification => {
            let mut counts = vec![0.0f64; n_classes];
            for &y in responses {
                counts[y as usize] += 1.0;
            }
            n * (1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>())
        }
        Task::Regression => {
            let sum: f64 = responses.iter().sum();
            let sum_sq: f64 = responses.iter().map(|y| y * y).sum();
            (sum_sq - sum * sum / n).max(0.0)
        }
    }
}

fn leaf(task: Task, n_classes: usize, responses: &[f64]) -> RefNode {
    match task {
        Task::Regression => {
            RefNode::Leaf(responses.iter().sum::<f64>() / responses.len() as f64)
        }
        Task::Classification => {
            let mut counts = vec![0usize; n_classes];
            for &y in responses {
                counts[y as usize] += 1;
            }
            // Majority class, ties toward the lower class index.
            let best = (0..n_classes).max_by_key(|&c| (counts[c], n_classes - c)).unwrap();
            RefNode::Leaf(best as f64)
        }
    }
}

/// Exhaustive CART: every feature, every midpoint between consecutive
/// distinct sorted values, best impurity decrease wins; ties resolve
/// toward the lower feature index, then the lower threshold.
pub fn grow_reference(
    task: Task,
    n_classes: usize,
    features: &[Vec<f64>],
    responses: &[f64],
) -> RefNode {
    let parent = impurity(task, n_classes, responses);
    if responses.len() <= 1 || parent <= 0.0 {
        return leaf(task, n_classes, responses);
    }
    let p = features[0].len();
    let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, decrease)
    for feature in 0..p {
        let mut values: Vec<f64> = features.iter().map(|row| row[feature]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let threshold = pair[0] + (pair[1] - pair[0]) / 2.0;
            let left: Vec<f64> = features
                .iter()
                .zip(responses)
                .filter(|(row, _)| row[feature] <= threshold)
                .map(|(_, &y)| y)
                .collect();
            let right: Vec<f64> = features
                .iter()
                .zip(responses)
                .filter(|(row, _)| row[feature] > threshold)
                .map(|(_, &y)| y)
                .collect();
            let decrease = parent
                - impurity(task, n_classes, &left)
                - impurity(task, n_classes, &right);
            if decrease <= 0.0 {
                continue;
            }
            let take = match best {
                None => true,
                Some((bf, bt, bd)) => {
                    decrease > bd
                        || (decrease == bd && (feature < bf || (feature == bf && threshold < bt)))
                }
            };
            if take {
                best = Some((feature, threshold, decrease));
            }
        }
    }
    let Some((feature, threshold, _)) = best else {
        return leaf(task, n_classes, responses);
    };
    let mut lf = Vec::new();
    let mut lr = Vec::new();
    let mut rf = Vec::new();
    let mut rr = Vec::new();
    for (row, &y) in features.iter().zip(responses) {
        if row[feature] <= threshold {
            lf.push(row.clone());
            lr.push(y);
        } else {
            rf.push(row.clone());
            rr.push(y);
        }
    }
    RefNode::Split {
        feature,
        threshold,
        left: Box::new(grow_reference(task, n_classes, &lf, &lr)),
        right: Box::new(grow_reference(task, n_classes, &rf, &rr)),
    }
}

pub fn reference_tree(table: &SampleTable) -> RefNode {
    let features: Vec<Vec<f64>> = table.rows().iter().map(|r| r.features.clone()).collect();
    let responses: Vec<f64> = table.rows().iter().map(|r| r.response).collect();
    grow_reference(table.task(), table.classes().len(), &features, &responses)
}
