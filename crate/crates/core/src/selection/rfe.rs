//! Recursive feature elimination: rank features by impurity importance
//! computed on the training partitions, then keep the smallest top-ranked
//! subset whose cross-validated performance stays within epsilon of the
//! best.

use crate::cv::{cross_validate, TuneGrid};
use crate::error::{Error, Result};
use crate::folds::FoldPlan;
use crate::forest::{train, ForestConfig};
use crate::metrics::{Metric, Scope};
use crate::rng::derive_seed;
use crate::sample::SampleTable;
use crate::selection::{improves, SelectionStep, SelectionStrategy, SelectionTrace};

pub struct RecursiveFeatureElimination {
    epsilon: f64,
    subset_sizes: Option<Vec<usize>>,
}

impl RecursiveFeatureElimination {
    pub fn new(epsilon: f64, subset_sizes: Option<Vec<usize>>) -> Self {
        Self { epsilon, subset_sizes }
    }

    /// Mean per-fold impurity importance, computed only on training
    /// partitions; never on held-out data.
    fn rank_features(
        &self,
        table: &SampleTable,
        plan: &FoldPlan,
        config: &ForestConfig,
    ) -> Result<Vec<String>> {
        let p = table.n_features();
        let mut totals = vec![0.0f64; p];
        for fold in 0..plan.k {
            let train_rows: Vec<_> = table
                .rows()
                .iter()
                .zip(&plan.assignment)
                .filter(|(_, &f)| f != fold)
                .map(|(r, _)| r.clone())
                .collect();
            let train_table = SampleTable::new(
                table.feature_names().to_vec(),
                table.task(),
                table.classes().to_vec(),
                train_rows,
            )?;
            let fold_config = ForestConfig {
                seed: derive_seed(config.seed, 0x8fe0 ^ fold as u64),
                ..config.clone()
            };
            let model = train(&train_table, &fold_config)?;
            for (total, v) in totals.iter_mut().zip(&model.importance) {
                *total += v;
            }
        }
        let mut ranked: Vec<(usize, f64)> = totals.into_iter().enumerate().collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
        Ok(ranked
            .into_iter()
            .map(|(i, _)| table.feature_names()[i].clone())
            .collect())
    }
}

impl SelectionStrategy for RecursiveFeatureElimination {
    fn name(&self) -> &'static str {
        "rfe"
    }

    fn select(
        &self,
        table: &SampleTable,
        plan: &FoldPlan,
        config: &ForestConfig,
        objective: Metric,
    ) -> Result<SelectionTrace> {
        let p = table.n_features();
        if p < 2 {
            return Err(Error::Argument(
                "feature elimination needs at least 2 features".into(),
            ));
        }
        let sizes: Vec<usize> = match &self.subset_sizes {
            Some(sizes) => {
                if sizes.is_empty()
                    || sizes.iter().any(|&s| s < 2 || s > p)
                    || sizes.windows(2).any(|w| w[0] <= w[1])
                {
                    return Err(Error::Argument(format!(
                        "subset sizes must be strictly descending within [2, {p}]"
                    )));
                }
                sizes.clone()
            }
            None => (2..=p).rev().collect(),
        };

        let ranking = self.rank_features(table, plan, config)?;
        let rank_mtry = config.mtry.min(p).max(1);

        let mut steps = Vec::new();
        let mut scored: Vec<(usize, f64)> = Vec::new();
        for &size in &sizes {
            let candidate: Vec<String> = ranking[..size].to_vec();
            let reduced = table.select_features(&candidate)?;
            let mtry = rank_mtry.min(size);
            let score = cross_validate(&reduced, plan, config, &TuneGrid::single(mtry), objective)
                .ok()
                .and_then(|r| r.objective_value(Scope::PerFoldMean));
            steps.push(SelectionStep {
                features: candidate,
                objective: score.unwrap_or(f64::NAN),
                accepted: false,
            });
            if let Some(score) = score {
                scored.push((size, score));
            }
        }
        if scored.is_empty() {
            return Err(Error::SelectionFailure("every candidate subset was degenerate".into()));
        }

        let &(_, best_score) = scored
            .iter()
            .max_by(|a, b| {
                let ord = a.1.partial_cmp(&b.1).expect("finite");
                if objective.higher_is_better() {
                    ord
                } else {
                    ord.reverse()
                }
            })
            .expect("non-empty");
        // Smallest size whose score is within epsilon of the best.
        let chosen = scored
            .iter()
            .filter(|&&(_, score)| !improves(objective, best_score, score, self.epsilon))
            .map(|&(size, _)| size)
            .min()
            .expect("best size qualifies");

        let final_features: Vec<String> = ranking[..chosen].to_vec();
        for step in &mut steps {
            if step.features.len() == chosen {
                step.accepted = true;
            }
        }
        Ok(SelectionTrace {
            steps,
            final_features,
            strategy: self.name().to_string(),
            plan_strategy: plan.strategy.clone(),
        })
    }
}
