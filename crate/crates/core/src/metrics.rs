//! Classification and regression scores plus the two aggregation scopes:
//! unweighted per-fold mean and global pooled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Kappa,
    Rmse,
    R2,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Kappa => "kappa",
            Metric::Rmse => "rmse",
            Metric::R2 => "r2",
        }
    }

    pub fn parse(name: &str) -> Result<Metric> {
        match name {
            "accuracy" => Ok(Metric::Accuracy),
            "kappa" => Ok(Metric::Kappa),
            "rmse" => Ok(Metric::Rmse),
            "r2" => Ok(Metric::R2),
            other => Err(Error::Argument(format!("unknown metric '{other}'"))),
        }
    }

    pub fn higher_is_better(&self) -> bool {
        !matches!(self, Metric::Rmse)
    }

    /// Metrics reported for a task, the headline objective first.
    pub fn for_task(task: Task) -> &'static [Metric] {
        match task {
            Task::Classification => &[Metric::Kappa, Metric::Accuracy],
            Task::Regression => &[Metric::Rmse, Metric::R2],
        }
    }

    /// The tuning/selection default: kappa for classification, rmse for
    /// regression.
    pub fn default_objective(task: Task) -> Metric {
        match task {
            Task::Classification => Metric::Kappa,
            Task::Regression => Metric::Rmse,
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    PerFoldMean,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: Metric,
    pub scope: Scope,
    pub value: f64,
    /// Folds where the metric was undefined and skipped (per-fold scope only).
    pub folds_skipped: usize,
}

/// Rows = reference, columns = predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self { n_classes, counts: vec![vec![0; n_classes]; n_classes] }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = counts.len();
        if n == 0 || counts.iter().any(|row| row.len() != n) {
            return Err(Error::Argument("confusion matrix must be square".into()));
        }
        Ok(Self { n_classes: n, counts })
    }

    /// Tally (observed, predicted) class-index pairs.
    pub fn from_pairs(n_classes: usize, observed: &[f64], predicted: &[f64]) -> Result<Self> {
        if observed.len() != predicted.len() {
            return Err(Error::Argument("observed/predicted length mismatch".into()));
        }
        let mut cm = Self::new(n_classes);
        for (&o, &p) in observed.iter().zip(predicted) {
            let (o, p) = (o as usize, p as usize);
            if o >= n_classes || p >= n_classes {
                return Err(Error::Argument(format!(
                    "class index out of range: observed {o}, predicted {p}"
                )));
            }
            cm.counts[o][p] += 1;
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|i| self.counts[i][i]).sum()
    }
}

/// Fraction of agreeing pairs: trace / total.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Argument("empty confusion matrix".into()));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// Cohen's kappa: (po - pe) / (1 - pe).
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Argument("empty confusion matrix".into()));
    }
    let t = total as f64;
    let po = cm.trace() as f64 / t;
    let pe: f64 = (0..cm.n_classes)
        .map(|i| {
            let row: u64 = cm.counts[i].iter().sum();
            let col: u64 = (0..cm.n_classes).map(|j| cm.counts[j][i]).sum();
            (row as f64 / t) * (col as f64 / t)
        })
        .sum();
    if pe >= 1.0 {
        return Err(Error::UndefinedMetric("kappa"));
    }
    Ok((po - pe) / (1.0 - pe))
}

pub fn rmse(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    if observed.is_empty() || observed.len() != predicted.len() {
        return Err(Error::Argument(
            "rmse needs equal, non-empty observed/predicted vectors".into(),
        ));
    }
    let mse = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p).powi(2))
        .sum::<f64>()
        / observed.len() as f64;
    Ok(mse.sqrt())
}

/// Squared Pearson correlation between observed and predicted.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    if observed.len() != predicted.len() || observed.len() < 2 {
        return Err(Error::Argument(
            "r2 needs equal vectors of length >= 2".into(),
        ));
    }
    let n = observed.len() as f64;
    let mo = observed.iter().sum::<f64>() / n;
    let mp = predicted.iter().sum::<f64>() / n;
    let cov: f64 = observed.iter().zip(predicted).map(|(o, p)| (o - mo) * (p - mp)).sum();
    let vo: f64 = observed.iter().map(|o| (o - mo).powi(2)).sum();
    let vp: f64 = predicted.iter().map(|p| (p - mp).powi(2)).sum();
    if vo == 0.0 || vp == 0.0 {
        return Err(Error::UndefinedMetric("r2"));
    }
    Ok((cov * cov) / (vo * vp))
}

/// Held-out predictions of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPredictions {
    pub fold: usize,
    pub observed: Vec<f64>,
    pub predicted: Vec<f64>,
}

fn evaluate(metric: Metric, n_classes: usize, observed: &[f64], predicted: &[f64]) -> Result<f64> {
    match metric {
        Metric::Accuracy => accuracy(&ConfusionMatrix::from_pairs(n_classes, observed, predicted)?),
        Metric::Kappa => kappa(&ConfusionMatrix::from_pairs(n_classes, observed, predicted)?),
        Metric::Rmse => rmse(observed, predicted),
        Metric::R2 => r_squared(observed, predicted),
    }
}

/// One metric in both scopes. Undefined per-fold values are skipped and
/// counted, never imputed; the per-fold mean is unweighted.
pub fn aggregate_metric(
    metric: Metric,
    n_classes: usize,
    folds: &[FoldPredictions],
) -> Vec<MetricValue> {
    let mut out = Vec::new();
    let mut defined = Vec::new();
    let mut skipped = 0usize;
    for f in folds {
        match evaluate(metric, n_classes, &f.observed, &f.predicted) {
            Ok(v) => defined.push(v),
            Err(_) => skipped += 1,
        }
    }
    if !defined.is_empty() {
        out.push(MetricValue {
            metric,
            scope: Scope::PerFoldMean,
            value: defined.iter().sum::<f64>() / defined.len() as f64,
            folds_skipped: skipped,
        });
    }
    let pooled_observed: Vec<f64> =
        folds.iter().flat_map(|f| f.observed.iter().copied()).collect();
    let pooled_predicted: Vec<f64> =
        folds.iter().flat_map(|f| f.predicted.iter().copied()).collect();
    if let Ok(v) = evaluate(metric, n_classes, &pooled_observed, &pooled_predicted) {
        out.push(MetricValue { metric, scope: Scope::Global, value: v, folds_skipped: 0 });
    }
    out
}

/// All task metrics in both scopes over the per-fold held-out predictions.
pub fn aggregate(
    task: Task,
    n_classes: usize,
    folds: &[FoldPredictions],
) -> Result<Vec<MetricValue>> {
    if folds.is_empty() || folds.iter().all(|f| f.observed.is_empty()) {
        return Err(Error::Argument("aggregate needs at least one prediction".into()));
    }
    let mut out = Vec::new();
    for &metric in Metric::for_task(task) {
        out.extend(aggregate_metric(metric, n_classes, folds));
    }
    if out.is_empty() {
        return Err(Error::UndefinedAggregate);
    }
    Ok(out)
}

/// Convenience lookup into an aggregate result.
pub fn find_value(values: &[MetricValue], metric: Metric, scope: Scope) -> Option<f64> {
    values
        .iter()
        .find(|v| v.metric == metric && v.scope == scope)
        .map(|v| v.value)
}
