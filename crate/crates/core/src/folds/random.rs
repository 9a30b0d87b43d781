//! Random k-fold assignment.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::folds::{FoldPlan, FoldStrategy};
use crate::rng::seeded;
use crate::sample::SampleTable;

/// Uniformly random split into k folds with sizes differing by at most one.
/// The shuffle runs over sorted sample ids, so the assignment is invariant
/// to row order.
pub struct RandomKFold {
    k: usize,
    seed: u64,
}

impl RandomKFold {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed }
    }
}

impl FoldStrategy for RandomKFold {
    fn name(&self) -> &'static str {
        "random"
    }

    fn plan(&self, table: &SampleTable) -> Result<FoldPlan> {
        let n = table.n_rows();
        if self.k < 2 || self.k > n {
            return Err(Error::Argument(format!(
                "k must be in [2, {n}], got {}",
                self.k
            )));
        }
        let mut ids: Vec<i64> = table.rows().iter().map(|r| r.id).collect();
        ids.sort_unstable();
        let mut rng = seeded(self.seed);
        ids.shuffle(&mut rng);

        // First n % k folds take one extra sample.
        let base = n / self.k;
        let extra = n % self.k;
        let mut fold_of_id = std::collections::HashMap::with_capacity(n);
        let mut cursor = 0usize;
        for fold in 0..self.k {
            let size = base + usize::from(fold < extra);
            for &id in &ids[cursor..cursor + size] {
                fold_of_id.insert(id, fold);
            }
            cursor += size;
        }
        let assignment = table.rows().iter().map(|r| fold_of_id[&r.id]).collect();
        Ok(FoldPlan {
            k: self.k,
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

    fn numbered(n: usize) -> crate::sample::SampleTable {
        let points: Vec<(i64, u32, f64, f64)> =
            (0..n).map(|i| (i as i64, 0, i as f64, 0.0)).collect();
        table_at(&points)
    }

    #[test]
    fn nine_rows_three_balanced_folds() {
        let plan = RandomKFold::new(3, 1).plan(&numbered(9)).unwrap();
        assert_eq!(plan.fold_sizes(), vec![3, 3, 3]);
    }

    #[test]
    fn remainder_goes_to_the_first_folds() {
        let plan = RandomKFold::new(3, 1).plan(&numbered(10)).unwrap();
        assert_eq!(plan.fold_sizes(), vec![4, 3, 3]);
    }

    #[test]
    fn same_seed_same_assignment() {
        let table = numbered(20);
        let a = RandomKFold::new(4, 9).plan(&table).unwrap();
        let b = RandomKFold::new(4, 9).plan(&table).unwrap();
        assert_eq!(a, b);
        let c = RandomKFold::new(4, 10).plan(&table).unwrap();
        assert_ne!(a.assignment, c.assignment);
    }

    #[test]
    fn assignment_follows_ids_not_row_order() {
        let forward = table_at(&[(1, 0, 0.0, 0.0), (2, 0, 1.0, 0.0), (3, 0, 2.0, 0.0)]);
        let reversed = table_at(&[(3, 0, 2.0, 0.0), (2, 0, 1.0, 0.0), (1, 0, 0.0, 0.0)]);
        let a = RandomKFold::new(2, 4).plan(&forward).unwrap();
        let b = RandomKFold::new(2, 4).plan(&reversed).unwrap();
        // id 1 is row 0 forward, row 2 reversed; fold must match per id.
        assert_eq!(a.assignment[0], b.assignment[2]);
        assert_eq!(a.assignment[1], b.assignment[1]);
        assert_eq!(a.assignment[2], b.assignment[0]);
    }

    #[test]
    fn k_larger_than_n_rejected() {
        assert!(RandomKFold::new(5, 0).plan(&numbered(4)).is_err());
        assert!(RandomKFold::new(1, 0).plan(&numbered(4)).is_err());
    }
}
