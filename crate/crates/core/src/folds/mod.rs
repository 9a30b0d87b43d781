//! Cross-validation fold strategies behind a common trait, registered by
//! name and selected at runtime.

mod cluster;
mod random;
mod spatial;

pub use cluster::ClusterFolds;
pub use random::RandomKFold;
pub use spatial::SpatialBlockFolds;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::SampleTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGeometry {
    pub x_min: f64,
    pub y_min: f64,
    pub block_width: f64,
    pub block_height: f64,
    pub columns: usize,
    pub rows: usize,
}

/// An assignment of every sample to exactly one of k validation folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Per-row fold index, aligned with the table's row order.
    pub assignment: Vec<usize>,
    pub strategy: String,
    pub block_geometry: Option<BlockGeometry>,
}

impl FoldPlan {
    /// Checks the shared plan invariants against a table.
    pub fn validate(&self, table: &SampleTable) -> Result<()> {
        if self.assignment.len() != table.n_rows() {
            return Err(Error::Validation(format!(
                "plan covers {} samples, table has {}",
                self.assignment.len(),
                table.n_rows()
            )));
        }
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignment {
            if f >= self.k {
                return Err(Error::Validation(format!("fold index {f} out of range")));
            }
            sizes[f] += 1;
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Validation("every fold must be non-empty".into()));
        }
        Ok(())
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// CSV of (sample id, fold) for external auditing.
    pub fn write_csv(&self, table: &SampleTable, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        let io_err = |e| Error::io(path.display().to_string(), e);
        writeln!(w, "id,fold").map_err(io_err)?;
        for (row, &fold) in table.rows().iter().zip(&self.assignment) {
            writeln!(w, "{},{}", row.id, fold).map_err(io_err)?;
        }
        Ok(())
    }
}

/// A fold-generation algorithm; implementations are interchangeable and
/// looked up by name in the registry.
pub trait FoldStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn plan(&self, table: &SampleTable) -> Result<FoldPlan>;
}

/// Parameters shared by all registered strategies; each strategy reads the
/// fields it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldParams {
    pub k: usize,
    pub seed: u64,
    pub block_cols: usize,
    pub block_rows: usize,
}

impl Default for FoldParams {
    fn default() -> Self {
        // 5x4 mirrors the documented 20-block example configuration.
        Self { k: 10, seed: 0, block_cols: 5, block_rows: 4 }
    }
}

type Constructor = fn(&FoldParams) -> Result<Box<dyn FoldStrategy>>;

const REGISTRY: &[(&str, Constructor)] = &[
    ("random", |p| Ok(Box::new(RandomKFold::new(p.k, p.seed)))),
    ("spatial_block", |p| {
        Ok(Box::new(SpatialBlockFolds::new(p.block_cols, p.block_rows)?))
    }),
    ("cluster", |_| Ok(Box::new(ClusterFolds))),
];

pub fn strategy_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Look up a registered fold strategy by name.
pub fn create_strategy(name: &str, params: &FoldParams) -> Result<Box<dyn FoldStrategy>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
        .and_then(|(_, make)| make(params))
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::sample::{GroupId, SampleRow, SampleTable, Task};

    /// A regression table from (id, group, x, y) tuples with a dummy feature.
    pub fn table_at(points: &[(i64, u32, f64, f64)]) -> SampleTable {
        let rows = points
            .iter()
            .map(|&(id, group, x, y)| SampleRow {
                id,
                group: GroupId(group),
                x,
                y,
                features: vec![x + y],
                response: x,
            })
            .collect();
        SampleTable::new(vec!["f1".into()], Task::Regression, vec![], rows).unwrap()
    }
}
