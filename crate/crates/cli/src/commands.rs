use std::fmt::Write as _;
use std::path::Path;

use spatialcv::cv::{cross_validate, CvReport};
use spatialcv::error::{Error, Result};
use spatialcv::folds::{create_strategy as fold_strategy, FoldPlan};
use spatialcv::forest::{train, Forest, ForestConfig};
use spatialcv::metrics::Scope;
use spatialcv::raster::{predict_surface, read_ascii_grid, write_ascii_grid, RasterStack};
use spatialcv::sample::{read_samples_csv, write_samples_csv, CsvSchema, SampleTable, Task};
use spatialcv::selection::{create_strategy as selection_strategy, refit_selected};
use spatialcv::synth::{make_benchmark, BenchmarkSpec, DEFAULT_SEED};

use crate::config::RunConfig;

/// Read a stack manifest: one `band_name = path.asc` line per band, `#`
/// comments allowed. Relative paths resolve against the manifest location.
pub fn read_stack_manifest(path: &Path) -> Result<RasterStack> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut stack = RasterStack::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, raw_path) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{} line {}: expected 'band_name = path.asc'",
                path.display(),
                lineno + 1
            ))
        })?;
        let band_path = base.join(raw_path.trim());
        stack.push(name.trim(), read_ascii_grid(&band_path)?)?;
    }
    if stack.is_empty() {
        return Err(Error::Config(format!("{}: stack manifest is empty", path.display())));
    }
    Ok(stack)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

fn load_table(config: &RunConfig) -> Result<SampleTable> {
    read_samples_csv(&config.samples, &CsvSchema::default(), config.task)
}

fn make_plan(config: &RunConfig, strategy: &str, table: &SampleTable) -> Result<FoldPlan> {
    fold_strategy(strategy, &config.fold_params)?.plan(table)
}

fn summary_line(strategy: &str, report: &CvReport) -> String {
    let metric = report.objective.as_str();
    let fmt = |scope| match report.objective_value(scope) {
        Some(v) => format!("{v:.6}"),
        None => "undefined".to_string(),
    };
    format!(
        "{strategy} {metric}={} (per-fold) / {} (global)",
        fmt(Scope::PerFoldMean),
        fmt(Scope::Global)
    )
}

pub fn cmd_cv(config: &RunConfig) -> Result<()> {
    let table = load_table(config)?;
    let plan = make_plan(config, &config.fold_strategy, &table)?;
    eprintln!(
        "cv: {} samples, {} features, {} folds ({})",
        table.n_rows(),
        table.n_features(),
        plan.k,
        plan.strategy
    );
    let forest_config = config.forest_config(2);
    let grid = config.tune_grid(table.n_features())?;
    let report = cross_validate(&table, &plan, &forest_config, &grid, config.objective)?;

    ensure_dir(&config.output)?;
    report.write_json(config.output.join("report.json"))?;
    report.write_held_out_csv(config.output.join("held_out.csv"))?;
    plan.write_csv(&table, config.output.join("folds.csv"))?;
    // Deployment model: full table at the chosen mtry. The CV estimates
    // above never see it.
    let model = train(&table, &ForestConfig { mtry: report.chosen_mtry, ..forest_config })?;
    model.save_json(config.output.join("model.json"))?;
    eprintln!("cv: chosen mtry {}, reports in {}", report.chosen_mtry, config.output.display());
    println!("{}", summary_line(&plan.strategy, &report));
    Ok(())
}

pub fn cmd_select(config: &RunConfig) -> Result<()> {
    let strategy_name = config.selection_strategy.as_deref().ok_or_else(|| {
        Error::Config("select needs a selection strategy (ffs or rfe)".into())
    })?;
    let table = load_table(config)?;
    if table.n_features() < 2 {
        return Err(Error::Config("selection needs at least two features".into()));
    }
    let eval_plan = make_plan(config, &config.fold_strategy, &table)?;
    let search_folds =
        config.selection_folds.clone().unwrap_or_else(|| config.fold_strategy.clone());
    let search_plan = make_plan(config, &search_folds, &table)?;

    let strategy = selection_strategy(strategy_name, &config.selection_params)?;
    // RFE ranks with mtry = p; FFS fixes mtry internally.
    let forest_config = config.forest_config(table.n_features());
    eprintln!(
        "select: {strategy_name} search on {} folds ({search_folds}), refit on {} folds ({})",
        search_plan.k, eval_plan.k, eval_plan.strategy
    );
    let trace = strategy.select(&table, &search_plan, &forest_config, config.objective)?;
    let report =
        refit_selected(&table, &trace, &eval_plan, &forest_config, config.objective)?;

    ensure_dir(&config.output)?;
    trace.write_json(config.output.join("trace.json"))?;
    trace.write_csv(config.output.join("trace.csv"))?;
    report.write_json(config.output.join("report.json"))?;
    report.write_held_out_csv(config.output.join("held_out.csv"))?;
    let reduced = table.select_features(&trace.final_features)?;
    let model = train(
        &reduced,
        &ForestConfig { mtry: report.chosen_mtry, ..config.forest_config(2) },
    )?;
    model.save_json(config.output.join("model.json"))?;
    eprintln!("select: {} steps, reports in {}", trace.steps.len(), config.output.display());
    println!(
        "{} features={}",
        summary_line(&format!("{strategy_name}[{search_folds}]"), &report),
        trace.final_features.join(",")
    );
    Ok(())
}

pub fn cmd_predict(model_path: &Path, stack_path: &Path, out_path: &Path) -> Result<()> {
    let model = Forest::load_json(model_path)?;
    let stack = read_stack_manifest(stack_path)?;
    let surface = predict_surface(&model, &stack)?;
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_ascii_grid(&surface, out_path)?;
    if model.task == Task::Classification {
        let legend_path = out_path.with_extension("legend.txt");
        let mut legend = String::new();
        for (index, class) in model.classes.iter().enumerate() {
            writeln!(legend, "{index} = {class}").expect("string write");
        }
        std::fs::write(&legend_path, legend)
            .map_err(|e| Error::io(legend_path.display().to_string(), e))?;
    }
    println!("predict wrote {}", out_path.display());
    Ok(())
}

pub fn cmd_synth(
    task: Task,
    seed: u64,
    spec_path: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    // Spec files only need the fields that differ from the shipped setup.
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct SpecFile {
        ncols: Option<usize>,
        nrows: Option<usize>,
        cell_size: Option<f64>,
        n_signal: Option<usize>,
        n_distractor: Option<usize>,
        signal_range: Option<f64>,
        distractor_range: Option<f64>,
        n_clusters: Option<usize>,
        cluster_radius: Option<f64>,
        samples_per_cluster: Option<usize>,
        noise_fraction: Option<f64>,
        predictor_noise: Option<f64>,
        n_classes: Option<usize>,
    }

    let mut spec = BenchmarkSpec::shipped(task, seed);
    if let Some(path) = spec_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let file: SpecFile = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        macro_rules! merge {
            ($($field:ident),*) => {
                $(if let Some(v) = file.$field { spec.$field = v; })*
            };
        }
        merge!(
            ncols, nrows, cell_size, n_signal, n_distractor, signal_range,
            distractor_range, n_clusters, cluster_radius, samples_per_cluster,
            noise_fraction, predictor_noise, n_classes
        );
    }
    let bench = make_benchmark(&spec)?;

    ensure_dir(out_dir)?;
    let mut manifest = String::new();
    for (name, grid) in bench.stack.iter() {
        write_ascii_grid(grid, out_dir.join(format!("{name}.asc")))?;
        writeln!(manifest, "{name} = {name}.asc").expect("string write");
    }
    let manifest_path = out_dir.join("stack.txt");
    std::fs::write(&manifest_path, manifest)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    write_ascii_grid(&bench.response, out_dir.join("response.asc"))?;
    write_samples_csv(&bench.table, out_dir.join("samples.csv"))?;
    let truth_path = out_dir.join("truth.json");
    let truth = serde_json::to_string_pretty(&bench.truth)?;
    std::fs::write(&truth_path, truth)
        .map_err(|e| Error::io(truth_path.display().to_string(), e))?;

    println!(
        "synth wrote {} bands and {} samples to {}",
        bench.stack.len(),
        bench.table.n_rows(),
        out_dir.display()
    );
    Ok(())
}

/// The eight-cell experiment: {all features, rfe, ffs random, ffs spatial}
/// evaluated under both random and spatial cross-validation.
pub fn cmd_matrix(config: &RunConfig, spatial: &str) -> Result<()> {
    let table = load_table(config)?;
    let random_plan = make_plan(config, "random", &table)?;
    let spatial_plan = make_plan(config, spatial, &table)?;
    let grid = config.tune_grid(table.n_features())?;

    // Selected feature sets, one per model row.
    let rfe_config = config.forest_config(table.n_features());
    let models: Vec<(&str, Option<Vec<String>>)> = vec![
        ("all", None),
        (
            "rfe",
            Some(
                selection_strategy("rfe", &config.selection_params)?
                    .select(&table, &random_plan, &rfe_config, config.objective)?
                    .final_features,
            ),
        ),
        (
            "ffs_random",
            Some(
                selection_strategy("ffs", &config.selection_params)?
                    .select(&table, &random_plan, &rfe_config, config.objective)?
                    .final_features,
            ),
        ),
        (
            "ffs_spatial",
            Some(
                selection_strategy("ffs", &config.selection_params)?
                    .select(&table, &spatial_plan, &rfe_config, config.objective)?
                    .final_features,
            ),
        ),
    ];

    ensure_dir(&config.output)?;
    let mut rows = String::from("model,folds,metric,per_fold,global,features\n");
    for (name, features) in &models {
        let reduced;
        let (eval_table, feature_list) = match features {
            None => (&table, table.feature_names().join("|")),
            Some(selected) => {
                reduced = table.select_features(selected)?;
                (&reduced, selected.join("|"))
            }
        };
        let eval_grid = match features {
            None => grid.clone(),
            Some(_) => config.tune_grid(eval_table.n_features())?,
        };
        for (fold_name, plan) in [("random", &random_plan), (spatial, &spatial_plan)] {
            let report = cross_validate(
                eval_table,
                plan,
                &config.forest_config(2),
                &eval_grid,
                config.objective,
            )?;
            let fmt = |scope| match report.objective_value(scope) {
                Some(v) => format!("{v:.6}"),
                None => String::new(),
            };
            writeln!(
                rows,
                "{name},{fold_name},{},{},{},{feature_list}",
                config.objective.as_str(),
                fmt(Scope::PerFoldMean),
                fmt(Scope::Global)
            )
            .expect("string write");
            eprintln!("matrix: {name} x {fold_name} done");
        }
    }
    let out = config.output.join("matrix.csv");
    std::fs::write(&out, rows).map_err(|e| Error::io(out.display().to_string(), e))?;
    println!("matrix wrote 8 rows to {}", out.display());
    Ok(())
}

pub fn default_synth_seed() -> u64 {
    DEFAULT_SEED
}
