//! Greedy forward feature selection driven by cross-validated performance.
//!
//! Stage 1 evaluates every two-feature combination with mtry fixed to 2;
//! later stages add one feature at a time and stop as soon as no addition
//! improves the per-fold-mean objective by more than epsilon.

use crate::cv::{cross_validate, TuneGrid};
use crate::error::{Error, Result};
use crate::folds::FoldPlan;
use crate::forest::ForestConfig;
use crate::metrics::{Metric, Scope};
use crate::sample::SampleTable;
use crate::selection::{improves, SelectionStep, SelectionStrategy, SelectionTrace};

pub struct ForwardFeatureSelection {
    epsilon: f64,
}

impl ForwardFeatureSelection {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon }
    }

    /// Per-fold-mean objective of one candidate feature set, or None when
    /// the candidate model is degenerate.
    fn evaluate(
        &self,
        table: &SampleTable,
        plan: &FoldPlan,
        config: &ForestConfig,
        objective: Metric,
        features: &[String],
    ) -> Option<f64> {
        let reduced = table.select_features(features).ok()?;
        // mtry stays fixed at 2 throughout the selection search.
        let report =
            cross_validate(&reduced, plan, config, &TuneGrid::single(2), objective).ok()?;
        report.objective_value(Scope::PerFoldMean)
    }
}

impl SelectionStrategy for ForwardFeatureSelection {
    fn name(&self) -> &'static str {
        "ffs"
    }

    fn select(
        &self,
        table: &SampleTable,
        plan: &FoldPlan,
        config: &ForestConfig,
        objective: Metric,
    ) -> Result<SelectionTrace> {
        let names = table.feature_names();
        let p = names.len();
        if p < 2 {
            return Err(Error::Argument(
                "forward selection needs at least 2 features".into(),
            ));
        }

        let mut steps = Vec::new();

        // Stage 1: all C(p, 2) pairs in lexicographic feature order; strict
        // comparison keeps the first (lexicographically earliest) best pair.
        let mut best_pair: Option<(Vec<String>, f64)> = None;
        for i in 0..p {
            for j in i + 1..p {
                let candidate = vec![names[i].clone(), names[j].clone()];
                let score = self.evaluate(table, plan, config, objective, &candidate);
                steps.push(SelectionStep {
                    features: candidate.clone(),
                    objective: score.unwrap_or(f64::NAN),
                    accepted: false,
                });
                if let Some(score) = score {
                    let take = match &best_pair {
                        None => true,
                        Some((_, incumbent)) => improves(objective, score, *incumbent, 0.0),
                    };
                    if take {
                        best_pair = Some((candidate, score));
                    }
                }
            }
        }
        let (mut selected, mut incumbent_score) = best_pair.ok_or_else(|| {
            Error::SelectionFailure("every two-feature model was degenerate".into())
        })?;
        mark_accepted(&mut steps, &selected);

        // Later stages: try adding each remaining feature; accept the best
        // addition only if it improves by more than epsilon.
        loop {
            let remaining: Vec<&String> =
                names.iter().filter(|n| !selected.contains(n)).collect();
            if remaining.is_empty() {
                break;
            }
            let mut best_addition: Option<(Vec<String>, f64)> = None;
            for name in remaining {
                let mut candidate = selected.clone();
                candidate.push(name.clone());
                let score = self.evaluate(table, plan, config, objective, &candidate);
                steps.push(SelectionStep {
                    features: candidate.clone(),
                    objective: score.unwrap_or(f64::NAN),
                    accepted: false,
                });
                if let Some(score) = score {
                    let take = match &best_addition {
                        None => true,
                        Some((_, current)) => improves(objective, score, *current, 0.0),
                    };
                    if take {
                        best_addition = Some((candidate, score));
                    }
                }
            }
            match best_addition {
                Some((candidate, score))
                    if improves(objective, score, incumbent_score, self.epsilon) =>
                {
                    selected = candidate;
                    incumbent_score = score;
                    mark_accepted(&mut steps, &selected);
                }
                _ => break,
            }
        }

        Ok(SelectionTrace {
            steps,
            final_features: selected,
            strategy: self.name().to_string(),
            plan_strategy: plan.strategy.clone(),
        })
    }
}

fn mark_accepted(steps: &mut [SelectionStep], features: &[String]) {
    if let Some(step) = steps.iter_mut().rev().find(|s| s.features == features) {
        step.accepted = true;
    }
}
