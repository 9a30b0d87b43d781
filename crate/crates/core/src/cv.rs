//! Cross-validation of a forest over a FoldPlan, with mtry tuning.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folds::FoldPlan;
use crate::forest::{train, ForestConfig};
use crate::metrics::{
    aggregate, aggregate_metric, find_value, FoldPredictions, Metric, MetricValue, Scope,
};
use crate::rng::derive_seed;
use crate::sample::{SampleTable, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneGrid {
    pub mtry_values: Vec<usize>,
}

impl TuneGrid {
    pub fn new(mtry_values: Vec<usize>) -> Result<Self> {
        if mtry_values.is_empty() {
            return Err(Error::Argument("tuning grid must be non-empty".into()));
        }
        if mtry_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("tuning grid must be strictly ascending".into()));
        }
        Ok(Self { mtry_values })
    }

    pub fn single(mtry: usize) -> Self {
        Self { mtry_values: vec![mtry] }
    }
}

/// {2, ..., n_features} thinned to at most 8 evenly spaced values that keep
/// both endpoints.
pub fn default_mtry_grid(n_features: usize) -> Result<TuneGrid> {
    if n_features < 2 {
        return Err(Error::Argument(
            "mtry tuning needs at least 2 features".into(),
        ));
    }
    let lo = 2usize;
    let hi = n_features;
    let count = hi - lo + 1;
    let mut values: Vec<usize> = if count <= 8 {
        (lo..=hi).collect()
    } else {
        (0..8)
            .map(|i| lo + ((i as f64) * (hi - lo) as f64 / 7.0).round() as usize)
            .collect()
    };
    values.dedup();
    TuneGrid::new(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub strategy: String,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutRecord {
    pub id: i64,
    pub fold: usize,
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub plan: PlanSummary,
    pub chosen_mtry: usize,
    pub objective: Metric,
    pub metrics: Vec<MetricValue>,
    /// One record per sample, in table row order.
    pub held_out: Vec<HeldOutRecord>,
    pub config: ForestConfig,
    /// Not serialized: outputs must be byte-identical across runs.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl CvReport {
    pub fn objective_value(&self, scope: Scope) -> Option<f64> {
        find_value(&self.metrics, self.objective, scope)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn write_held_out_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        let io_err = |e| Error::io(path.display().to_string(), e);
        writeln!(w, "id,fold,observed,predicted").map_err(io_err)?;
        for r in &self.held_out {
            writeln!(w, "{},{},{},{}", r.id, r.fold, r.observed, r.predicted)
                .map_err(io_err)?;
        }
        Ok(())
    }
}

/// Held-out predictions of one (mtry, fold) cell, with sample ids.
struct CellResult {
    fold: usize,
    ids: Vec<i64>,
    observed: Vec<f64>,
    predicted: Vec<f64>,
}

fn run_fold(
    table: &SampleTable,
    plan: &FoldPlan,
    config: &ForestConfig,
    mtry: usize,
    fold: usize,
) -> Result<CellResult> {
    let train_rows: Vec<_> = table
        .rows()
        .iter()
        .zip(&plan.assignment)
        .filter(|(_, &f)| f != fold)
        .map(|(r, _)| r.clone())
        .collect();
    let test_rows: Vec<_> = table
        .rows()
        .iter()
        .zip(&plan.assignment)
        .filter(|(_, &f)| f == fold)
        .map(|(r, _)| r.clone())
        .collect();
    if table.task() == Task::Classification {
        let mut present = vec![false; table.classes().len()];
        for r in &train_rows {
            present[r.response as usize] = true;
        }
        if present.iter().filter(|&&b| b).count() < 2 {
            return Err(Error::FoldDegeneracy(
                fold,
                "training partition holds a single class".into(),
            ));
        }
    }
    let train_table = SampleTable::new(
        table.feature_names().to_vec(),
        table.task(),
        table.classes().to_vec(),
        train_rows,
    )?;
    let fold_config = ForestConfig {
        mtry,
        seed: derive_seed(config.seed, ((mtry as u64) << 32) | fold as u64),
        ..config.clone()
    };
    let model = train(&train_table, &fold_config)?;
    let mut result = CellResult {
        fold,
        ids: Vec::with_capacity(test_rows.len()),
        observed: Vec::with_capacity(test_rows.len()),
        predicted: Vec::with_capacity(test_rows.len()),
    };
    for row in &test_rows {
        result.ids.push(row.id);
        result.observed.push(row.response);
        result.predicted.push(model.predict(&row.features)?);
    }
    Ok(result)
}

/// Cross-validate over the plan for every mtry in the grid; report the
/// winning mtry's held-out runs. Ties in the per-fold-mean objective go to
/// the smaller mtry; there is no refit on the full data for reporting.
pub fn cross_validate(
    table: &SampleTable,
    plan: &FoldPlan,
    config: &ForestConfig,
    grid: &TuneGrid,
    objective: Metric,
) -> Result<CvReport> {
    let started = std::time::Instant::now();
    plan.validate(table)?;
    if plan.k < 2 {
        return Err(Error::Argument("cross-validation requires k >= 2".into()));
    }
    let p = table.n_features();
    if grid.mtry_values.iter().any(|&m| m < 1 || m > p) {
        return Err(Error::Config(format!(
            "tuning grid values must lie in [1, {p}]"
        )));
    }

    // Folds x mtry cells are independent jobs.
    let jobs: Vec<(usize, usize)> = grid
        .mtry_values
        .iter()
        .flat_map(|&m| (0..plan.k).map(move |f| (m, f)))
        .collect();
    let cells: Vec<Result<CellResult>> = jobs
        .par_iter()
        .map(|&(mtry, fold)| run_fold(table, plan, config, mtry, fold))
        .collect();

    let mut per_mtry: Vec<(usize, Vec<CellResult>)> =
        grid.mtry_values.iter().map(|&m| (m, Vec::new())).collect();
    for ((mtry, _), cell) in jobs.iter().zip(cells) {
        let cell = cell?;
        per_mtry
            .iter_mut()
            .find(|(m, _)| m == mtry)
            .expect("grid value")
            .1
            .push(cell);
    }

    let n_classes = table.classes().len();
    let mut best: Option<(usize, f64)> = None;
    for (mtry, cells) in &per_mtry {
        let folds: Vec<FoldPredictions> = cells
            .iter()
            .map(|c| FoldPredictions {
                fold: c.fold,
                observed: c.observed.clone(),
                predicted: c.predicted.clone(),
            })
            .collect();
        let values = aggregate_metric(objective, n_classes, &folds);
        let Some(score) = find_value(&values, objective, Scope::PerFoldMean) else {
            continue;
        };
        let improves = match best {
            None => true,
            Some((_, current)) => {
                if objective.higher_is_better() {
                    score > current
                } else {
                    score < current
                }
            }
        };
        if improves {
            best = Some((*mtry, score));
        }
    }
    let (chosen_mtry, _) = best.ok_or(Error::UndefinedAggregate)?;

    let winning = &per_mtry
        .iter()
        .find(|(m, _)| *m == chosen_mtry)
        .expect("winner from grid")
        .1;
    let fold_predictions: Vec<FoldPredictions> = winning
        .iter()
        .map(|c| FoldPredictions {
            fold: c.fold,
            observed: c.observed.clone(),
            predicted: c.predicted.clone(),
        })
        .collect();
    let metrics = aggregate(table.task(), n_classes, &fold_predictions)?;

    // Held-out records in table row order; every sample appears once.
    let mut by_id: std::collections::HashMap<i64, HeldOutRecord> = std::collections::HashMap::new();
    for c in winning {
        for ((&id, &observed), &predicted) in
            c.ids.iter().zip(&c.observed).zip(&c.predicted)
        {
            by_id.insert(id, HeldOutRecord { id, fold: c.fold, observed, predicted });
        }
    }
    let held_out: Vec<HeldOutRecord> = table
        .rows()
        .iter()
        .map(|r| by_id.remove(&r.id).expect("plan covers every sample"))
        .collect();

    Ok(CvReport {
        plan: PlanSummary { strategy: plan.strategy.clone(), k: plan.k },
        chosen_mtry,
        objective,
        metrics,
        held_out,
        config: config.clone(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
