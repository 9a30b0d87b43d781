//! Feature selection strategies behind a common trait: greedy forward
//! selection and recursive feature elimination.

mod ffs;
mod rfe;

pub use ffs::ForwardFeatureSelection;
pub use rfe::RecursiveFeatureElimination;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cv::{cross_validate, default_mtry_grid, CvReport, TuneGrid};
use crate::error::{Error, Result};
use crate::folds::FoldPlan;
use crate::forest::ForestConfig;
use crate::metrics::Metric;
use crate::sample::SampleTable;

/// Strict-improvement tolerance in the objective's units.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    /// Candidate feature set evaluated at this step.
    pub features: Vec<String>,
    /// Per-fold-mean objective of the candidate; NaN when undefined.
    pub objective: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
    pub final_features: Vec<String>,
    pub strategy: String,
    pub plan_strategy: String,
}

impl SelectionTrace {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Flat CSV of (step, features, objective, accepted).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        let io_err = |e| Error::io(path.display().to_string(), e);
        writeln!(w, "step,features,objective,accepted").map_err(io_err)?;
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                i,
                s.features.join("|"),
                s.objective,
                s.accepted
            )
            .map_err(io_err)?;
        }
        Ok(())
    }
}

pub trait SelectionStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn select(
        &self,
        table: &SampleTable,
        plan: &FoldPlan,
        config: &ForestConfig,
        objective: Metric,
    ) -> Result<SelectionTrace>;
}

/// Parameters shared by the registered selection strategies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionParams {
    pub epsilon: f64,
    /// RFE subset sizes, descending; None means p, p-1, ..., 2.
    pub subset_sizes: Option<Vec<usize>>,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON, subset_sizes: None }
    }
}

type Constructor = fn(&SelectionParams) -> Box<dyn SelectionStrategy>;

const REGISTRY: &[(&str, Constructor)] = &[
    ("ffs", |p| Box::new(ForwardFeatureSelection::new(p.epsilon))),
    ("rfe", |p| {
        Box::new(RecursiveFeatureElimination::new(p.epsilon, p.subset_sizes.clone()))
    }),
];

pub fn strategy_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn create_strategy(
    name: &str,
    params: &SelectionParams,
) -> Result<Box<dyn SelectionStrategy>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, make)| make(params))
        .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
}

/// True when `candidate` beats `incumbent` by more than epsilon.
pub(crate) fn improves(
    objective: Metric,
    candidate: f64,
    incumbent: f64,
    epsilon: f64,
) -> bool {
    if objective.higher_is_better() {
        candidate - incumbent > epsilon
    } else {
        incumbent - candidate > epsilon
    }
}

/// Cross-validate the selected features with the full mtry tuning grid.
pub fn refit_selected(
    table: &SampleTable,
    trace: &SelectionTrace,
    plan: &FoldPlan,
    config: &ForestConfig,
    objective: Metric,
) -> Result<CvReport> {
    if trace.final_features.is_empty() {
        return Err(Error::Argument("selection trace has no final features".into()));
    }
    let reduced = table.select_features(&trace.final_features)?;
    let grid = if trace.final_features.len() >= 2 {
        default_mtry_grid(trace.final_features.len())?
    } else {
        TuneGrid::single(1)
    };
    cross_validate(&reduced, plan, config, &grid, objective)
}
