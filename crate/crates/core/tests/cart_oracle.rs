//! Tree growth must agree with an exhaustive-split reference CART when the
//! randomness is switched off (single tree, mtry = p, no bootstrap).

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spatialcv::forest::{train, ForestConfig};
use spatialcv::sample::{GroupId, SampleRow, SampleTable, Task};

const FEATURE_LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

fn random_table(task: Task, n_classes: usize, rng: &mut ChaCha8Rng) -> SampleTable {
    let rows: Vec<SampleRow> = (0..8)
        .map(|i| {
            let features: Vec<f64> = (0..3)
                .map(|_| FEATURE_LEVELS[rng.gen_range(0..FEATURE_LEVELS.len())])
                .collect();
            let response = match task {
                Task::Classification => rng.gen_range(0..n_classes) as f64,
                Task::Regression => rng.gen_range(0..4) as f64,
            };
            SampleRow {
                id: i,
                group: GroupId(0),
                x: i as f64,
                y: 0.0,
                features,
                response,
            }
        })
        .collect();
    let classes = match task {
        Task::Regression => vec![],
        Task::Classification => (0..n_classes).map(|c| format!("c{c}")).collect(),
    };
    SampleTable::new(
        vec!["f1".into(), "f2".into(), "f3".into()],
        task,
        classes,
        rows,
    )
    .unwrap()
}

fn assert_matches_reference(table: &SampleTable, seed: u64) {
    let config = ForestConfig {
        n_trees: 1,
        mtry: table.n_features(),
        min_node_size: 1,
        bootstrap: false,
        ..ForestConfig::defaults(table.task(), table.n_features(), seed)
    };
    let forest = train(table, &config).unwrap();
    let reference = common::reference_tree(table);
    for row in table.rows() {
        assert_eq!(
            forest.predict(&row.features).unwrap(),
            reference.predict(&row.features),
            "row {} diverges (task {:?}, seed {seed})",
            row.id,
            table.task()
        );
    }
}

#[test]
fn classification_trees_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xca47);
    for case in 0..12 {
        let n_classes = 2 + (case % 2);
        // Single-class draws cannot be trained on; redraw.
        let table = loop {
            let t = random_table(Task::Classification, n_classes, &mut rng);
            let first = t.rows()[0].response;
            if t.rows().iter().any(|r| r.response != first) {
                break t;
            }
        };
        assert_matches_reference(&table, case as u64);
    }
}

#[test]
fn regression_trees_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e55);
    for case in 0..12 {
        let table = random_table(Task::Regression, 0, &mut rng);
        assert_matches_reference(&table, case as u64);
    }
}
