//! Run configuration: a TOML manifest merged with command-line overrides.
//! Flags always win over the manifest.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spatialcv::cv::{default_mtry_grid, TuneGrid};
use spatialcv::error::{Error, Result};
use spatialcv::folds::FoldParams;
use spatialcv::forest::ForestConfig;
use spatialcv::metrics::Metric;
use spatialcv::sample::Task;
use spatialcv::selection::SelectionParams;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub task: Option<String>,
    pub samples: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub objective: Option<String>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub forest: ForestSection,
    #[serde(default)]
    pub folds: FoldsSection,
    #[serde(default)]
    pub selection: SelectionSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSection {
    pub n_trees: Option<usize>,
    pub min_node_size: Option<usize>,
    /// Explicit mtry tuning grid; omitted means the default grid.
    pub mtry_grid: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldsSection {
    pub strategy: Option<String>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub block_cols: Option<usize>,
    pub block_rows: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub strategy: Option<String>,
    /// Fold strategy used inside the selection search; defaults to the
    /// evaluation fold strategy.
    pub folds: Option<String>,
    pub epsilon: Option<f64>,
    pub subset_sizes: Option<Vec<usize>>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Flag overrides shared by the model-running subcommands.
#[derive(Debug, Default, clap::Args)]
pub struct Overrides {
    /// Manifest file with the run configuration
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Task: classification or regression
    #[arg(long)]
    pub task: Option<String>,
    /// Sample table CSV
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Objective metric: kappa, accuracy, rmse or r2
    #[arg(long)]
    pub objective: Option<String>,
    /// Forest seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of trees
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Minimum node size
    #[arg(long)]
    pub min_node_size: Option<usize>,
    /// Fold strategy: random, spatial_block or cluster
    #[arg(long)]
    pub fold_strategy: Option<String>,
    /// Number of random folds
    #[arg(long)]
    pub k: Option<usize>,
    /// Fold shuffling seed
    #[arg(long)]
    pub fold_seed: Option<u64>,
    /// Spatial block grid columns
    #[arg(long)]
    pub block_cols: Option<usize>,
    /// Spatial block grid rows
    #[arg(long)]
    pub block_rows: Option<usize>,
    /// Selection strategy: ffs or rfe
    #[arg(long)]
    pub selection_strategy: Option<String>,
    /// Fold strategy inside the selection search
    #[arg(long)]
    pub selection_folds: Option<String>,
    /// Minimum improvement a selection step must deliver
    #[arg(long)]
    pub epsilon: Option<f64>,
}

/// The merged, validated configuration a command runs from.
pub struct RunConfig {
    pub task: Task,
    pub samples: PathBuf,
    pub output: PathBuf,
    pub objective: Metric,
    pub seed: u64,
    pub n_trees: Option<usize>,
    pub min_node_size: Option<usize>,
    pub mtry_grid: Option<Vec<usize>>,
    pub fold_strategy: String,
    pub fold_params: FoldParams,
    pub selection_strategy: Option<String>,
    pub selection_folds: Option<String>,
    pub selection_params: SelectionParams,
}

fn parse_task(name: &str) -> Result<Task> {
    match name {
        "classification" => Ok(Task::Classification),
        "regression" => Ok(Task::Regression),
        other => Err(Error::Config(format!(
            "unknown task '{other}' (expected classification or regression)"
        ))),
    }
}

impl RunConfig {
    pub fn resolve(flags: &Overrides) -> Result<RunConfig> {
        let manifest = match &flags.manifest {
            Some(path) => Manifest::load(path)?,
            None => Manifest::default(),
        };

        let task_name = flags
            .task
            .clone()
            .or(manifest.task)
            .ok_or_else(|| Error::Config("task is required (flag or manifest)".into()))?;
        let task = parse_task(&task_name)?;
        let samples = flags
            .samples
            .clone()
            .or(manifest.samples)
            .ok_or_else(|| Error::Config("samples path is required".into()))?;
        let output = flags
            .output
            .clone()
            .or(manifest.output)
            .ok_or_else(|| Error::Config("output directory is required".into()))?;
        let objective = match flags.objective.clone().or(manifest.objective) {
            Some(name) => Metric::parse(&name)?,
            None => Metric::default_objective(task),
        };
        let defaults = FoldParams::default();
        let fold_params = FoldParams {
            k: flags.k.or(manifest.folds.k).unwrap_or(defaults.k),
            seed: flags.fold_seed.or(manifest.folds.seed).unwrap_or(defaults.seed),
            block_cols: flags
                .block_cols
                .or(manifest.folds.block_cols)
                .unwrap_or(defaults.block_cols),
            block_rows: flags
                .block_rows
                .or(manifest.folds.block_rows)
                .unwrap_or(defaults.block_rows),
        };
        let selection_defaults = SelectionParams::default();
        Ok(RunConfig {
            task,
            samples,
            output,
            objective,
            seed: flags.seed.or(manifest.seed).unwrap_or(0),
            n_trees: flags.n_trees.or(manifest.forest.n_trees),
            min_node_size: flags.min_node_size.or(manifest.forest.min_node_size),
            mtry_grid: manifest.forest.mtry_grid,
            fold_params,
            fold_strategy: flags
                .fold_strategy
                .clone()
                .or(manifest.folds.strategy)
                .unwrap_or_else(|| "random".to_string()),
            selection_strategy: flags
                .selection_strategy
                .clone()
                .or(manifest.selection.strategy),
            selection_folds: flags
                .selection_folds
                .clone()
                .or(manifest.selection.folds),
            selection_params: SelectionParams {
                epsilon: flags
                    .epsilon
                    .or(manifest.selection.epsilon)
                    .unwrap_or(selection_defaults.epsilon),
                subset_sizes: manifest.selection.subset_sizes,
            },
        })
    }

    pub fn forest_config(&self, mtry: usize) -> ForestConfig {
        let mut config = ForestConfig::defaults(self.task, mtry, self.seed);
        if let Some(n) = self.n_trees {
            config.n_trees = n;
        }
        if let Some(m) = self.min_node_size {
            config.min_node_size = m;
        }
        config
    }

    pub fn tune_grid(&self, n_features: usize) -> Result<TuneGrid> {
        match &self.mtry_grid {
            Some(values) => TuneGrid::new(values.clone()),
            None => {
                if n_features >= 2 {
                    default_mtry_grid(n_features)
                } else {
                    Ok(TuneGrid::single(1))
                }
            }
        }
    }
}
