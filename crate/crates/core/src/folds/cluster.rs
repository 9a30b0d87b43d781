//! Leave-one-cluster-out folds: every group is its own fold.

use crate::error::{Error, Result};
use crate::folds::{FoldPlan, FoldStrategy};
use crate::sample::{GroupId, SampleTable};

pub struct ClusterFolds;

impl FoldStrategy for ClusterFolds {
    fn name(&self) -> &'static str {
        "cluster"
    }

    fn plan(&self, table: &SampleTable) -> Result<FoldPlan> {
        let mut groups: Vec<GroupId> = table.rows().iter().map(|r| r.group).collect();
        groups.sort_unstable();
        groups.dedup();
        if groups.len() < 2 {
            return Err(Error::Argument(
                "leave-one-cluster-out needs at least 2 distinct groups".into(),
            ));
        }
        // Fold index = dense rank of the group id.
        let assignment = table
            .rows()
            .iter()
            .map(|r| groups.binary_search(&r.group).expect("group collected above"))
            .collect();
        Ok(FoldPlan {
            k: groups.len(),
            assignment,
            strategy: self.name().to_string(),
            block_geometry: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folds::testutil::table_at;

    #[test]
    fn eleven_clusters_give_eleven_folds() {
        let points: Vec<(i64, u32, f64, f64)> = (0..33)
            .map(|i| (i as i64, (i % 11) as u32, i as f64, 0.0))
            .collect();
        let plan = ClusterFolds.plan(&table_at(&points)).unwrap();
        assert_eq!(plan.k, 11);
    }

    #[test]
    fn fold_sizes_mirror_group_sizes() {
        let mut points = Vec::new();
        for i in 0..5 {
            points.push((i, 0u32, i as f64, 0.0));
        }
        for i in 5..8 {
            points.push((i, 1u32, i as f64, 0.0));
        }
        let plan = ClusterFolds.plan(&table_at(&points)).unwrap();
        assert_eq!(plan.fold_sizes(), vec![5, 3]);
    }

    #[test]
    fn group_ids_are_densely_ranked() {
        let plan = ClusterFolds
            .plan(&table_at(&[
                (1, 7, 0.0, 0.0),
                (2, 3, 1.0, 0.0),
                (3, 3, 2.0, 0.0),
                (4, 7, 3.0, 0.0),
            ]))
            .unwrap();
        assert_eq!(plan.k, 2);
        assert_eq!(plan.assignment, vec![1, 0, 0, 1]);
    }

    #[test]
    fn single_group_rejected() {
        let err = ClusterFolds.plan(&table_at(&[(1, 4, 0.0, 0.0), (2, 4, 1.0, 0.0)]));
        assert!(matches!(err, Err(Error::Argument(_))));
    }
}
