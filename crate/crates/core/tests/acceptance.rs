//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see them). Everything runs on the checked-in
//! synthetic benchmark seeds; no external data.

mod common;

use spatialcv::cv::{cross_validate, default_mtry_grid};
use spatialcv::folds::{create_strategy as fold_strategy, FoldParams};
use spatialcv::forest::{train, ForestConfig};
use spatialcv::metrics::{
    aggregate_metric, find_value, kappa, r_squared, rmse, ConfusionMatrix, FoldPredictions,
    Metric, Scope,
};
use spatialcv::raster::predict_surface;
use spatialcv::sample::{GroupId, SampleRow, SampleTable, Task};
use spatialcv::selection::{
    create_strategy as selection_strategy, refit_selected, SelectionParams,
};
use spatialcv::synth::{make_benchmark, Benchmark, BenchmarkSpec, DEFAULT_SEED};

fn verdict(criterion: usize, name: &str, ok: bool) {
    println!("criterion {criterion} ({name}): {}", if ok { "pass" } else { "fail" });
    assert!(ok, "criterion {criterion} ({name}) failed");
}

fn benchmark(task: Task, seed: u64) -> Benchmark {
    make_benchmark(&BenchmarkSpec::shipped(task, seed)).unwrap()
}

fn cluster_plan(table: &SampleTable) -> spatialcv::folds::FoldPlan {
    fold_strategy("cluster", &FoldParams::default()).unwrap().plan(table).unwrap()
}

fn random_plan(table: &SampleTable, seed: u64) -> spatialcv::folds::FoldPlan {
    fold_strategy("random", &FoldParams { k: 10, seed, ..Default::default() })
        .unwrap()
        .plan(table)
        .unwrap()
}

const SPURIOUS: [&str; 3] = ["coord_x", "coord_y", "elev"];

#[test]
fn criterion_01_metric_oracles() {
    let cm = ConfusionMatrix::from_counts(vec![vec![20, 5], vec![10, 15]]).unwrap();
    let accuracy = spatialcv::metrics::accuracy(&cm).unwrap();
    let ok = (kappa(&cm).unwrap() - 0.4).abs() < 1e-12
        && (accuracy - 0.7).abs() < 1e-12
        && (rmse(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap() - (2.0f64 / 3.0).sqrt()).abs()
            < 1e-12
        && (r_squared(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]).unwrap() - 0.64).abs()
            < 1e-12;
    verdict(1, "metric oracles", ok);
}

#[test]
fn criterion_02_cart_oracle_equivalence() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xacce);
    let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut ok = true;
    for case in 0..24 {
        let task = if case % 2 == 0 { Task::Classification } else { Task::Regression };
        let table = loop {
            let rows: Vec<SampleRow> = (0..8)
                .map(|i| SampleRow {
                    id: i,
                    group: GroupId(0),
                    x: i as f64,
                    y: 0.0,
                    features: (0..3).map(|_| levels[rng.gen_range(0..5)]).collect(),
                    response: match task {
                        Task::Classification => rng.gen_range(0..3) as f64,
                        Task::Regression => rng.gen_range(0..4) as f64,
                    },
                })
                .collect();
            if rows.iter().any(|r| r.response != rows[0].response) {
                let classes = match task {
                    Task::Regression => vec![],
                    Task::Classification => vec!["a".into(), "b".into(), "c".into()],
                };
                break SampleTable::new(
                    vec!["f1".into(), "f2".into(), "f3".into()],
                    task,
                    classes,
                    rows,
                )
                .unwrap();
            }
        };
        let config = ForestConfig {
            n_trees: 1,
            mtry: 3,
            min_node_size: 1,
            bootstrap: false,
            ..ForestConfig::defaults(task, 3, case)
        };
        let forest = train(&table, &config).unwrap();
        let reference = common::reference_tree(&table);
        for row in table.rows() {
            if forest.predict(&row.features).unwrap() != reference.predict(&row.features) {
                ok = false;
            }
        }
    }
    verdict(2, "CART oracle equivalence", ok);
}

#[test]
fn criterion_03_cv_gap() {
    let n_trees = 100;

    let reg = benchmark(Task::Regression, DEFAULT_SEED);
    let p = reg.table.n_features();
    let grid = default_mtry_grid(p).unwrap();
    let config = ForestConfig { n_trees, ..ForestConfig::defaults(Task::Regression, 2, 17) };
    let random = cross_validate(
        &reg.table,
        &random_plan(&reg.table, 3),
        &config,
        &grid,
        Metric::Rmse,
    )
    .unwrap();
    let cluster =
        cross_validate(&reg.table, &cluster_plan(&reg.table), &config, &grid, Metric::Rmse)
            .unwrap();
    let random_rmse = random.objective_value(Scope::PerFoldMean).unwrap();
    let cluster_rmse = cluster.objective_value(Scope::PerFoldMean).unwrap();

    let cls = benchmark(Task::Classification, DEFAULT_SEED);
    let config = ForestConfig { n_trees, ..ForestConfig::defaults(Task::Classification, 2, 17) };
    let random_k = cross_validate(
        &cls.table,
        &random_plan(&cls.table, 3),
        &config,
        &grid,
        Metric::Kappa,
    )
    .unwrap()
    .objective_value(Scope::PerFoldMean)
    .unwrap();
    let cluster_k =
        cross_validate(&cls.table, &cluster_plan(&cls.table), &config, &grid, Metric::Kappa)
            .unwrap()
            .objective_value(Scope::PerFoldMean)
            .unwrap();

    println!(
        "  rmse random {random_rmse:.4} vs cluster {cluster_rmse:.4}; \
         kappa random {random_k:.4} vs cluster {cluster_k:.4}"
    );
    let ok = random_rmse <= 0.75 * cluster_rmse && random_k - cluster_k >= 0.2;
    verdict(3, "random vs spatial CV gap", ok);
}

#[test]
fn criterion_04_spurious_importance() {
    let mut hits = 0;
    for i in 0..10 {
        let bench = benchmark(Task::Regression, DEFAULT_SEED + i);
        let config = ForestConfig {
            n_trees: 100,
            ..ForestConfig::defaults(Task::Regression, 2, 23 + i)
        };
        let forest = train(&bench.table, &config).unwrap();
        let top3 = forest.importance_ranking();
        if top3[..3].iter().any(|(name, _)| SPURIOUS.contains(&name.as_str())) {
            hits += 1;
        }
    }
    println!("  spurious feature in top 3: {hits}/10 runs");
    verdict(4, "spurious importance of coordinates and elevation", hits >= 8);
}

fn ffs_final_features(table: &SampleTable, plan: &spatialcv::folds::FoldPlan, seed: u64) -> Vec<String> {
    let config = ForestConfig { n_trees: 50, ..ForestConfig::defaults(table.task(), 2, seed) };
    selection_strategy("ffs", &SelectionParams::default())
        .unwrap()
        .select(table, plan, &config, Metric::Rmse)
        .unwrap()
        .final_features
}

#[test]
fn criterion_05_spatial_ffs_drops_coordinates() {
    let mut spatial_excludes = 0;
    let mut random_includes = 0;
    for i in 0..10 {
        let bench = benchmark(Task::Regression, DEFAULT_SEED + i);
        let spatial = ffs_final_features(&bench.table, &cluster_plan(&bench.table), 31 + i);
        if !spatial.iter().any(|f| f == "coord_x" || f == "coord_y") {
            spatial_excludes += 1;
        }
        let random = ffs_final_features(&bench.table, &random_plan(&bench.table, 5 + i), 31 + i);
        if random.iter().any(|f| f == "coord_x" || f == "coord_y") {
            random_includes += 1;
        }
    }
    println!(
        "  spatial FFS excluded coordinates in {spatial_excludes}/10, \
         random FFS included one in {random_includes}/10"
    );
    verdict(
        5,
        "forward selection coordinate handling",
        spatial_excludes >= 9 && random_includes >= 6,
    );
}

#[test]
fn criterion_06_rfe_keeps_a_coordinate() {
    let mut retained = 0;
    for i in 0..10 {
        let bench = benchmark(Task::Regression, DEFAULT_SEED + i);
        let config = ForestConfig {
            n_trees: 50,
            ..ForestConfig::defaults(Task::Regression, bench.table.n_features(), 41 + i)
        };
        let trace = selection_strategy("rfe", &SelectionParams::default())
            .unwrap()
            .select(&bench.table, &cluster_plan(&bench.table), &config, Metric::Rmse)
            .unwrap();
        if trace.final_features.iter().any(|f| f == "coord_x" || f == "coord_y") {
            retained += 1;
        }
    }
    println!("  RFE retained a coordinate in {retained}/10 runs");
    verdict(6, "RFE fails to remove coordinates", retained >= 7);
}

#[test]
fn criterion_07_spatial_selection_benefit() {
    let bench = benchmark(Task::Regression, DEFAULT_SEED);
    let plan = cluster_plan(&bench.table);
    let config = ForestConfig { n_trees: 100, ..ForestConfig::defaults(Task::Regression, 2, 53) };

    let all = cross_validate(
        &bench.table,
        &plan,
        &config,
        &default_mtry_grid(bench.table.n_features()).unwrap(),
        Metric::Rmse,
    )
    .unwrap()
    .objective_value(Scope::PerFoldMean)
    .unwrap();

    let trace = selection_strategy("ffs", &SelectionParams::default())
        .unwrap()
        .select(&bench.table, &plan, &config, Metric::Rmse)
        .unwrap();
    let refit = refit_selected(&bench.table, &trace, &plan, &config, Metric::Rmse)
        .unwrap()
        .objective_value(Scope::PerFoldMean)
        .unwrap();

    println!("  cluster-fold rmse: all features {all:.4}, spatial-FFS refit {refit:.4}");
    verdict(7, "spatial selection does not hurt", refit <= all);
}

/// Mean absolute column-to-column prediction jump at `col` (against its
/// left neighbor).
fn column_jump(grid: &spatialcv::raster::RasterGrid, col: usize) -> f64 {
    let mut total = 0.0;
    for row in 0..grid.nrows {
        total += (grid.get(row, col) - grid.get(row, col - 1)).abs();
    }
    total / grid.nrows as f64
}

#[test]
fn criterion_08_prediction_artifact_statistic() {
    let bench = benchmark(Task::Regression, DEFAULT_SEED);
    let plan = cluster_plan(&bench.table);
    let config = ForestConfig { n_trees: 100, ..ForestConfig::defaults(Task::Regression, 2, 61) };

    let with_coords = train(&bench.table, &config).unwrap();
    let trace = selection_strategy("ffs", &SelectionParams::default())
        .unwrap()
        .select(&bench.table, &plan, &config, Metric::Rmse)
        .unwrap();
    let reduced = bench.table.select_features(&trace.final_features).unwrap();
    let without_coords = train(&reduced, &config).unwrap();

    let mid = bench.response.ncols / 2;
    let j = |model: &spatialcv::forest::Forest| {
        let surface = predict_surface(model, &bench.stack).unwrap();
        column_jump(&surface, mid) - column_jump(&surface, mid - 1)
    };
    let j_with = j(&with_coords);
    let j_without = j(&without_coords);
    println!("  midline jump statistic: with coordinates {j_with:.5}, spatial FFS {j_without:.5}");
    verdict(8, "coordinate models leave midline artifacts", j_with > j_without);
}

#[test]
fn criterion_09_leakage_and_determinism() {
    use rand::{Rng, SeedableRng};

    // Group integrity of cluster folds over 1000 random tables.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1eaf);
    let mut integrity = true;
    for _ in 0..1000 {
        let n = rng.gen_range(6..40);
        let groups = rng.gen_range(2..6);
        let rows: Vec<SampleRow> = (0..n)
            .map(|i| SampleRow {
                id: i as i64,
                group: GroupId(rng.gen_range(0..groups)),
                x: rng.gen_range(0.0..100.0),
                y: rng.gen_range(0.0..100.0),
                features: vec![rng.gen_range(-1.0..1.0)],
                response: rng.gen_range(-1.0..1.0),
            })
            .collect();
        let distinct: std::collections::BTreeSet<u32> = rows.iter().map(|r| r.group.0).collect();
        let table =
            SampleTable::new(vec!["f1".into()], Task::Regression, vec![], rows).unwrap();
        if distinct.len() < 2 {
            continue;
        }
        let plan = fold_strategy("cluster", &FoldParams::default())
            .unwrap()
            .plan(&table)
            .unwrap();
        if plan.validate(&table).is_err() || plan.k != distinct.len() {
            integrity = false;
        }
        let mut fold_of_group = std::collections::HashMap::new();
        for (row, &fold) in table.rows().iter().zip(&plan.assignment) {
            if *fold_of_group.entry(row.group.0).or_insert(fold) != fold {
                integrity = false;
            }
        }
    }

    // Bitwise identical reports at 1 and 8 worker threads.
    let bench = benchmark(Task::Regression, DEFAULT_SEED);
    let plan = cluster_plan(&bench.table);
    let config = ForestConfig { n_trees: 50, ..ForestConfig::defaults(Task::Regression, 2, 71) };
    let grid = default_mtry_grid(bench.table.n_features()).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let report =
                cross_validate(&bench.table, &plan, &config, &grid, Metric::Rmse).unwrap();
            serde_json::to_string(&report).unwrap()
        })
    };
    let identical = run(1) == run(8);
    println!("  group integrity over 1000 tables: {integrity}; jobs 1 vs 8 bitwise: {identical}");
    verdict(9, "leakage and determinism invariants", integrity && identical);
}

#[test]
fn criterion_10_per_fold_vs_global() {
    let folds = vec![
        FoldPredictions { fold: 0, observed: vec![0.0, 0.0], predicted: vec![1.0, 1.0] },
        FoldPredictions { fold: 1, observed: vec![0.0, 0.0], predicted: vec![3.0, 3.0] },
    ];
    let values = aggregate_metric(Metric::Rmse, 0, &folds);
    let per_fold = find_value(&values, Metric::Rmse, Scope::PerFoldMean).unwrap();
    let global = find_value(&values, Metric::Rmse, Scope::Global).unwrap();
    let ok = (per_fold - 2.0).abs() < 1e-12 && (global - 5.0f64.sqrt()).abs() < 1e-12;
    println!("  per-fold mean {per_fold}, pooled {global}");
    verdict(10, "per-fold vs global divergence", ok);
}
