//! Bagged CART ensemble with out-of-bag scoring and impurity-decrease
//! variable importance.

mod tree;

pub use tree::{LeafValue, TreeNode};

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::sample::{SampleTable, Task};
use tree::GrowContext;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub mtry: usize,
    pub min_node_size: usize,
    pub seed: u64,
    /// When false every tree trains on the full table; OOB is then undefined.
    pub bootstrap: bool,
}

impl ForestConfig {
    /// 500 trees, min node size 1 (classification) / 5 (regression).
    pub fn defaults(task: Task, mtry: usize, seed: u64) -> Self {
        Self {
            n_trees: 500,
            mtry,
            min_node_size: match task {
                Task::Classification => 1,
                Task::Regression => 5,
            },
            seed,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<TreeNode>,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    pub classes: Vec<String>,
    pub task: Task,
    /// OOB accuracy (classification) or squared-correlation R2 (regression);
    /// NaN when bootstrap was disabled.
    pub oob_score: f64,
    /// Total impurity decrease per feature, scaled so the maximum is 1.
    pub importance: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    forest: Forest,
}

pub fn train(table: &SampleTable, config: &ForestConfig) -> Result<Forest> {
    let n = table.n_rows();
    let p = table.n_features();
    if n < 2 {
        return Err(Error::Argument("training requires at least 2 rows".into()));
    }
    if p == 0 {
        return Err(Error::Argument("training requires at least 1 feature".into()));
    }
    if config.n_trees == 0 {
        return Err(Error::Config("n_trees must be >= 1".into()));
    }
    if config.mtry == 0 || config.mtry > p {
        return Err(Error::Config(format!(
            "mtry must be in [1, {p}], got {}",
            config.mtry
        )));
    }
    let n_classes = table.classes().len();
    if table.task() == Task::Classification {
        let mut present = vec![false; n_classes];
        for row in table.rows() {
            present[row.response as usize] = true;
        }
        if present.iter().filter(|&&b| b).count() < 2 {
            return Err(Error::DegenerateResponse(
                "classification training data contains a single class".into(),
            ));
        }
    }

    let features: Vec<Vec<f64>> = table.rows().iter().map(|r| r.features.clone()).collect();
    let responses: Vec<f64> = table.rows().iter().map(|r| r.response).collect();
    let ctx = GrowContext {
        features: &features,
        responses: &responses,
        task: table.task(),
        n_classes,
        n_features: p,
        mtry: config.mtry,
        min_node_size: config.min_node_size,
    };

    // One independent generator per tree keeps parallel training
    // reproducible at any thread count.
    let grown: Vec<(TreeNode, Vec<bool>, Vec<f64>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(derive_seed(config.seed, t as u64));
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut in_bag = vec![false; n];
            for &r in &rows {
                in_bag[r] = true;
            }
            let mut importance = vec![0.0f64; p];
            let root = tree::grow(&ctx, &rows, &mut rng, &mut importance);
            (root, in_bag, importance)
        })
        .collect();

    let mut trees = Vec::with_capacity(config.n_trees);
    let mut in_bag_per_tree = Vec::with_capacity(config.n_trees);
    let mut importance = vec![0.0f64; p];
    for (root, in_bag, tree_importance) in grown {
        trees.push(root);
        in_bag_per_tree.push(in_bag);
        for (total, v) in importance.iter_mut().zip(&tree_importance) {
            *total += v;
        }
    }
    let max_importance = importance.iter().cloned().fold(0.0f64, f64::max);
    if max_importance > 0.0 {
        for v in &mut importance {
            *v /= max_importance;
        }
    }

    let mut forest = Forest {
        trees,
        config: config.clone(),
        feature_names: table.feature_names().to_vec(),
        classes: table.classes().to_vec(),
        task: table.task(),
        oob_score: f64::NAN,
        importance,
    };
    if config.bootstrap {
        forest.oob_score = oob_score(&forest, &features, &responses, &in_bag_per_tree);
    }
    Ok(forest)
}

fn oob_score(
    forest: &Forest,
    features: &[Vec<f64>],
    responses: &[f64],
    in_bag_per_tree: &[Vec<bool>],
) -> f64 {
    let mut observed = Vec::new();
    let mut predicted = Vec::new();
    for (i, row) in features.iter().enumerate() {
        let oob_trees: Vec<&TreeNode> = forest
            .trees
            .iter()
            .zip(in_bag_per_tree)
            .filter(|(_, in_bag)| !in_bag[i])
            .map(|(t, _)| t)
            .collect();
        if oob_trees.is_empty() {
            continue;
        }
        observed.push(responses[i]);
        predicted.push(aggregate_trees(forest, &oob_trees, row));
    }
    if observed.is_empty() {
        return f64::NAN;
    }
    match forest.task {
        Task::Classification => {
            let hits = observed
                .iter()
                .zip(&predicted)
                .filter(|(o, p)| o == p)
                .count();
            hits as f64 / observed.len() as f64
        }
        Task::Regression => squared_correlation(&observed, &predicted).unwrap_or(f64::NAN),
    }
}

fn squared_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() < 2 {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov * cov) / (va * vb))
}

fn aggregate_trees(forest: &Forest, trees: &[&TreeNode], features: &[f64]) -> f64 {
    match forest.task {
        Task::Regression => {
            let sum: f64 = trees
                .iter()
                .map(|t| match t.predict(features) {
                    LeafValue::Mean(v) => *v,
                    LeafValue::Distribution(_) => unreachable!("regression leaf"),
                })
                .sum();
            sum / trees.len() as f64
        }
        Task::Classification => {
            // Majority vote over per-tree argmax; ties go to the lowest
            // class index at both levels.
            let mut votes = vec![0usize; forest.classes.len()];
            for t in trees {
                match t.predict(features) {
                    LeafValue::Distribution(dist) => votes[argmax(dist)] += 1,
                    LeafValue::Mean(_) => unreachable!("classification leaf"),
                }
            }
            argmax_usize(&votes) as f64
        }
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn argmax_usize(values: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Forest {
    /// Ensemble prediction for one feature vector: class index (as a real)
    /// for classification, mean tree output for regression.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.feature_names.len() {
            return Err(Error::FeatureMismatch(vec![format!(
                "expected {} features, got {}",
                self.feature_names.len(),
                features.len()
            )]));
        }
        let trees: Vec<&TreeNode> = self.trees.iter().collect();
        Ok(aggregate_trees(self, &trees, features))
    }

    /// Features with their scaled importances, descending; ties keep
    /// feature order.
    pub fn importance_ranking(&self) -> Vec<(String, f64)> {
        let mut ranked: Vec<(usize, f64)> =
            self.importance.iter().cloned().enumerate().collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
        ranked
            .into_iter()
            .map(|(i, v)| (self.feature_names[i].clone(), v))
            .collect()
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = ModelDocument { format_version: MODEL_FORMAT_VERSION, forest: self.clone() };
        let text = serde_json::to_string_pretty(&doc)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Forest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let doc: ModelDocument = serde_json::from_str(&text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        Ok(doc.forest)
    }

    /// A single-leaf forest predicting a constant; test and tooling helper.
    pub fn constant_stub(feature_names: Vec<String>, task: Task, value: f64) -> Forest {
        let leaf = match task {
            Task::Regression => LeafValue::Mean(value),
            Task::Classification => {
                let mut dist = vec![0.0; value as usize + 1];
                dist[value as usize] = 1.0;
                LeafValue::Distribution(dist)
            }
        };
        let classes = match task {
            Task::Regression => Vec::new(),
            Task::Classification => {
                (0..=value as usize).map(|i| i.to_string()).collect()
            }
        };
        let mtry = feature_names.len().max(1);
        Forest {
            trees: vec![TreeNode::Leaf { value: leaf }],
            config: ForestConfig {
                n_trees: 1,
                mtry,
                min_node_size: 1,
                seed: 0,
                bootstrap: false,
            },
            feature_names,
            classes,
            task,
            oob_score: f64::NAN,
            importance: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{GroupId, SampleRow};

    fn table(
        task: Task,
        classes: Vec<&str>,
        rows: Vec<(Vec<f64>, f64)>,
    ) -> SampleTable {
        let p = rows[0].0.len();
        let feature_names = (1..=p).map(|i| format!("f{i}")).collect();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, (features, response))| SampleRow {
                id: i as i64,
                group: GroupId(0),
                x: i as f64,
                y: 0.0,
                features,
                response,
            })
            .collect();
        SampleTable::new(
            feature_names,
            task,
            classes.into_iter().map(String::from).collect(),
            rows,
        )
        .unwrap()
    }

    fn indicator_table(n: usize) -> SampleTable {
        // response = indicator(f1 > 0); f2 is pure noise.
        let mut rng = seeded(99);
        let rows = (0..n)
            .map(|_| {
                let f1: f64 = rng.gen_range(-1.0..1.0);
                let f2: f64 = rng.gen_range(-1.0..1.0);
                (vec![f1, f2], if f1 > 0.0 { 1.0 } else { 0.0 })
            })
            .collect();
        table(Task::Classification, vec!["neg", "pos"], rows)
    }

    #[test]
    fn learns_an_indicator_rule() {
        let t = indicator_table(200);
        let config = ForestConfig { n_trees: 50, ..ForestConfig::defaults(Task::Classification, 1, 7) };
        let forest = train(&t, &config).unwrap();
        assert!(forest.oob_score >= 0.95, "oob accuracy {}", forest.oob_score);
        assert!(forest.importance[0] > forest.importance[1]);
    }

    #[test]
    fn constant_regression_response_gives_single_leaves() {
        let t = table(
            Task::Regression,
            vec![],
            (0..10).map(|i| (vec![i as f64], 4.5)).collect(),
        );
        let config = ForestConfig { n_trees: 5, ..ForestConfig::defaults(Task::Regression, 1, 3) };
        let forest = train(&t, &config).unwrap();
        for root in &forest.trees {
            assert_eq!(root, &TreeNode::Leaf { value: LeafValue::Mean(4.5) });
        }
        assert_eq!(forest.predict(&[2.0]).unwrap(), 4.5);
    }

    #[test]
    fn mtry_out_of_range_is_a_config_error() {
        let t = indicator_table(10);
        let config = ForestConfig { mtry: 3, ..ForestConfig::defaults(Task::Classification, 3, 0) };
        assert!(matches!(train(&t, &config), Err(Error::Config(_))));
    }

    #[test]
    fn single_class_table_is_degenerate() {
        let t = table(
            Task::Classification,
            vec!["a", "b"],
            (0..5).map(|i| (vec![i as f64], 0.0)).collect(),
        );
        let config = ForestConfig::defaults(Task::Classification, 1, 0);
        assert!(matches!(train(&t, &config), Err(Error::DegenerateResponse(_))));
    }

    #[test]
    fn constant_stub_predicts_its_constant() {
        let stub = Forest::constant_stub(vec!["f1".into()], Task::Regression, 2.5);
        assert_eq!(stub.predict(&[123.0]).unwrap(), 2.5);
    }

    #[test]
    fn majority_vote_and_tie_break() {
        let leaf = |class: usize| TreeNode::Leaf {
            value: LeafValue::Distribution(if class == 0 {
                vec![1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            }),
        };
        let mut forest = Forest::constant_stub(vec!["f1".into()], Task::Classification, 1.0);
        forest.classes = vec!["A".into(), "B".into()];
        // 3 trees voting A, A, B -> A.
        forest.trees = vec![leaf(0), leaf(0), leaf(1)];
        assert_eq!(forest.predict(&[0.0]).unwrap(), 0.0);
        // 2 trees voting A, B -> tie broken toward the lower class index.
        forest.trees = vec![leaf(1), leaf(0)];
        assert_eq!(forest.predict(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn prediction_length_mismatch_rejected() {
        let stub = Forest::constant_stub(vec!["f1".into(), "f2".into()], Task::Regression, 1.0);
        assert!(matches!(stub.predict(&[1.0]), Err(Error::FeatureMismatch(_))));
    }

    #[test]
    fn importance_ranking_is_descending_with_stable_ties() {
        let mut forest = Forest::constant_stub(
            vec!["a".into(), "b".into(), "c".into()],
            Task::Regression,
            0.0,
        );
        forest.importance = vec![0.2, 1.0, 0.2];
        let ranking = forest.importance_ranking();
        assert_eq!(ranking[0].0, "b");
        assert_eq!(ranking[1].0, "a"); // tie resolved by feature order
        assert_eq!(ranking[2].0, "c");
    }

    #[test]
    fn stump_forest_has_all_zero_importance() {
        let t = table(
            Task::Regression,
            vec![],
            (0..6).map(|i| (vec![i as f64], 1.0)).collect(),
        );
        let config = ForestConfig { n_trees: 3, ..ForestConfig::defaults(Task::Regression, 1, 0) };
        let forest = train(&t, &config).unwrap();
        assert!(forest.importance.iter().all(|&v| v == 0.0));
        assert!(forest.importance_ranking().iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn training_is_deterministic() {
        let t = indicator_table(80);
        let config = ForestConfig { n_trees: 20, ..ForestConfig::defaults(Task::Classification, 2, 11) };
        let a = train(&t, &config).unwrap();
        let b = train(&t, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_in_bag_fraction_is_about_63_percent() {
        // Rows should be in-bag in ~63.2% of trees.
        let t = indicator_table(100);
        let config = ForestConfig { n_trees: 500, ..ForestConfig::defaults(Task::Classification, 1, 5) };
        // Recreate the per-tree draws exactly as train() does.
        let n = t.n_rows();
        let mut in_bag_counts = vec![0usize; n];
        for tree in 0..config.n_trees {
            let mut rng = seeded(derive_seed(config.seed, tree as u64));
            let mut seen = vec![false; n];
            for _ in 0..n {
                seen[rng.gen_range(0..n)] = true;
            }
            for (count, &s) in in_bag_counts.iter_mut().zip(&seen) {
                if s {
                    *count += 1;
                }
            }
        }
        let mean_fraction = in_bag_counts.iter().sum::<usize>() as f64
            / (n * config.n_trees) as f64;
        assert!((mean_fraction - 0.632).abs() < 0.03, "fraction {mean_fraction}");
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let t = indicator_table(60);
        let config = ForestConfig { n_trees: 10, ..ForestConfig::defaults(Task::Classification, 2, 21) };
        let forest = train(&t, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        forest.save_json(&path).unwrap();
        let back = Forest::load_json(&path).unwrap();
        assert_eq!(forest, back);
        for row in t.rows() {
            assert_eq!(
                forest.predict(&row.features).unwrap(),
                back.predict(&row.features).unwrap()
            );
        }
    }
}
