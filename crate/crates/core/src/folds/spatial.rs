//! Spatial block folds: the sample bounding box is cut into an equal-sized
//! rectangle grid and every group lands in the block holding most of its
//! samples.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::folds::{BlockGeometry, FoldPlan, FoldStrategy};
use crate::sample::{GroupId, SampleTable};

pub struct SpatialBlockFolds {
    cols: usize,
    rows: usize,
}

impl SpatialBlockFolds {
    pub fn new(cols: usize, rows: usize) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::Argument("block grid dimensions must be positive".into()));
        }
        Ok(Self { cols, rows })
    }
}

impl FoldStrategy for SpatialBlockFolds {
    fn name(&self) -> &'static str {
        "spatial_block"
    }

    fn plan(&self, table: &SampleTable) -> Result<FoldPlan> {
        if table.n_rows() == 0 {
            return Err(Error::Argument("cannot block an empty table".into()));
        }
        let xs: Vec<f64> = table.rows().iter().map(|r| r.x).collect();
        let ys: Vec<f64> = table.rows().iter().map(|r| r.y).collect();
        let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Degenerate extents still get a positive block size.
        let block_width = ((x_max - x_min) / self.cols as f64).max(f64::MIN_POSITIVE);
        let block_height = ((y_max - y_min) / self.rows as f64).max(f64::MIN_POSITIVE);

        let block_of = |x: f64, y: f64| -> usize {
            let col = (((x - x_min) / block_width) as usize).min(self.cols - 1);
            let row = (((y - y_min) / block_height) as usize).min(self.rows - 1);
            row * self.cols + col
        };

        // Count samples per (group, block); each group goes to the block
        // holding most of its samples, ties toward the lower block index.
        let mut counts: BTreeMap<GroupId, BTreeMap<usize, usize>> = BTreeMap::new();
        for r in table.rows() {
            *counts
                .entry(r.group)
                .or_default()
                .entry(block_of(r.x, r.y))
                .or_default() += 1;
        }
        let mut block_of_group: BTreeMap<GroupId, usize> = BTreeMap::new();
        for (group, per_block) in &counts {
            // Ascending block iteration plus strict > keeps the lower block
            // on ties.
            let mut best_block = usize::MAX;
            let mut best_count = 0usize;
            for (&block, &count) in per_block {
                if count > best_count {
                    best_block = block;
                    best_count = count;
                }
            }
            block_of_group.insert(*group, best_block);
        }

        // Compact non-empty blocks into contiguous fold indices.
        let mut used: Vec<usize> = block_of_group.values().cloned().collect();
        used.sort_unstable();
        used.dedup();
        if used.len() < 2 {
            return Err(Error::DegeneratePartition(format!(
                "only {} non-empty block(s) in a {}x{} grid",
                used.len(),
                self.cols,
                self.rows
            )));
        }
        let fold_of_block: BTreeMap<usize, usize> =
            used.iter().enumerate().map(|(fold, &block)| (block, fold)).collect();

        let assignment = table
            .rows()
            .iter()
            .map(|r| fold_of_block[&block_of_group[&r.group]])
            .collect();
        Ok(FoldPlan {
            k: used.len(),
            assignment,
            strategy: self.name().to_string(),
            block_geometry: Some(BlockGeometry {
                x_min,
                y_min,
                block_width,
                block_height,
                columns: self.cols,
                rows: self.rows,
            }),
        })
    }
}
