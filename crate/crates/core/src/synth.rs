//! Synthetic autocorrelated landscapes and clustered sampling designs, so
//! the full pipeline can run end to end without external imagery.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{coordinate_layers, RasterGrid, RasterStack};
use crate::rng::{derive_seed, seeded};
use crate::sample::{extract_at_samples, GroupId, ResponseValue, SamplePoint, SampleTable, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub ncols: usize,
    pub nrows: usize,
    pub cell_size: f64,
    /// Autocorrelation range in cells; the Gaussian smoothing kernel's sigma.
    pub autocorr_range: f64,
    /// Target variance of the standardized field.
    pub sill: f64,
    pub seed: u64,
}

impl FieldSpec {
    fn validate(&self) -> Result<()> {
        if self.ncols < 16 || self.nrows < 16 {
            return Err(Error::Argument("field grid must be at least 16x16".into()));
        }
        if self.autocorr_range <= 0.0 {
            return Err(Error::Argument("autocorr_range must be positive".into()));
        }
        if self.sill <= 0.0 {
            return Err(Error::Argument("sill must be positive".into()));
        }
        let limit = self.ncols.min(self.nrows) as f64 / 4.0;
        if self.autocorr_range >= limit {
            return Err(Error::DegenerateRange(format!(
                "range {} must stay below min(grid dimension)/4 = {limit}",
                self.autocorr_range
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n_clusters: usize,
    /// Cluster radius in cells.
    pub cluster_radius: f64,
    pub samples_per_cluster: usize,
    pub seed: u64,
}

/// Zero-mean unit-variance field with approximately Gaussian-kernel
/// autocorrelation: seeded white noise convolved (periodically) with a
/// Gaussian kernel truncated at 3*range, then standardized and scaled to
/// the sill.
pub fn gaussian_random_field(spec: &FieldSpec) -> Result<RasterGrid> {
    spec.validate()?;
    let (w, h) = (spec.ncols, spec.nrows);
    let mut rng = seeded(spec.seed);
    let mut field: Vec<f64> = (0..w * h).map(|_| rng.sample(StandardNormal)).collect();

    let radius = (3.0 * spec.autocorr_range).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / (2.0 * spec.autocorr_range.powi(2))).exp())
        .collect();

    // Separable convolution with wrap-around keeps the field stationary.
    let convolve_axis = |src: &[f64], along_rows: bool| -> Vec<f64> {
        let mut out = vec![0.0f64; w * h];
        for row in 0..h {
            for col in 0..w {
                let mut acc = 0.0;
                for (ki, &kv) in kernel.iter().enumerate() {
                    let offset = ki as isize - radius;
                    let (r, c) = if along_rows {
                        (row, (col as isize + offset).rem_euclid(w as isize) as usize)
                    } else {
                        ((row as isize + offset).rem_euclid(h as isize) as usize, col)
                    };
                    acc += kv * src[r * w + c];
                }
                out[row * w + col] = acc;
            }
        }
        out
    };
    field = convolve_axis(&field, true);
    field = convolve_axis(&field, false);

    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    let sd = (field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let scale = spec.sill.sqrt() / sd;
    for v in &mut field {
        *v = (*v - mean) * scale;
    }

    RasterGrid::new(w, h, 0.0, 0.0, spec.cell_size, -9999.0, field)
}

/// A georeferenced sampling location before the response is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub id: i64,
    pub group: GroupId,
    pub x: f64,
    pub y: f64,
}

const CENTER_ATTEMPTS: usize = 20_000;

/// Clustered sampling: rejection-sampled cluster centers at least
/// 4*radius apart with a radius margin from the grid edge; samples are the
/// cell centers within the radius, capped by seeded subsampling.
pub fn clustered_design(template: &RasterGrid, spec: &DesignSpec) -> Result<Vec<DesignPoint>> {
    if spec.n_clusters < 2 {
        return Err(Error::Argument("need at least 2 clusters".into()));
    }
    let radius_cells = spec.cluster_radius / template.cell_size;
    let margin = radius_cells.ceil();
    if 2.0 * margin >= template.ncols as f64 || 2.0 * margin >= template.nrows as f64 {
        return Err(Error::DesignInfeasible(
            "cluster radius leaves no room inside the grid".into(),
        ));
    }
    let mut rng = seeded(spec.seed);
    let mut centers: Vec<(f64, f64)> = Vec::new(); // in cell units
    let mut attempts = 0usize;
    while centers.len() < spec.n_clusters {
        attempts += 1;
        if attempts > CENTER_ATTEMPTS {
            return Err(Error::DesignInfeasible(format!(
                "could not place {} centers >= 4*radius apart in {} attempts",
                spec.n_clusters, CENTER_ATTEMPTS
            )));
        }
        let cx = rng.gen_range(margin..template.ncols as f64 - margin);
        let cy = rng.gen_range(margin..template.nrows as f64 - margin);
        let min_spacing = 4.0 * radius_cells;
        if centers
            .iter()
            .all(|&(x, y)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() >= min_spacing)
        {
            centers.push((cx, cy));
        }
    }

    let mut points = Vec::new();
    let mut next_id = 0i64;
    for (cluster, &(cx, cy)) in centers.iter().enumerate() {
        // Candidate cells within the radius of the center, in cell units.
        let mut cells: Vec<(usize, usize)> = Vec::new();
        let r = radius_cells.max(0.0);
        let c0 = (cx - r).floor().max(0.0) as usize;
        let c1 = ((cx + r).ceil() as usize).min(template.ncols - 1);
        let r0 = (cy - r).floor().max(0.0) as usize;
        let r1 = ((cy + r).ceil() as usize).min(template.nrows - 1);
        for row_from_south in r0..=r1 {
            for col in c0..=c1 {
                let dx = col as f64 + 0.5 - cx;
                let dy = row_from_south as f64 + 0.5 - cy;
                if (dx * dx + dy * dy).sqrt() <= r {
                    cells.push((row_from_south, col));
                }
            }
        }
        if cells.is_empty() {
            // Sub-cell radius: fall back to the cell holding the center.
            cells.push((cy.floor() as usize, cx.floor() as usize));
        }
        if cells.len() > spec.samples_per_cluster {
            cells.shuffle(&mut rng);
            cells.truncate(spec.samples_per_cluster);
            cells.sort_unstable();
        }
        for (row_from_south, col) in cells {
            let x = template.x_min + (col as f64 + 0.5) * template.cell_size;
            let y = template.y_min + (row_from_south as f64 + 0.5) * template.cell_size;
            points.push(DesignPoint {
                id: next_id,
                group: GroupId(cluster as u32),
                x,
                y,
            });
            next_id += 1;
        }
    }
    Ok(points)
}

/// Everything needed to reproduce and audit a benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub task: Task,
    pub signal_bands: Vec<String>,
    pub distractor_bands: Vec<String>,
    pub coordinate_bands: Vec<String>,
    pub elevation_band: String,
    pub signal_weights: Vec<f64>,
    pub step_amplitude: f64,
    pub step_threshold: f64,
    pub noise_sd: f64,
    pub predictor_noise_sd: f64,
    /// Ascending class boundaries (classification only).
    pub class_edges: Vec<f64>,
    pub classes: Vec<String>,
    pub seed: u64,
}

pub struct Benchmark {
    pub table: SampleTable,
    pub stack: RasterStack,
    /// The noisy response surface the samples were read from.
    pub response: RasterGrid,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub task: Task,
    pub ncols: usize,
    pub nrows: usize,
    pub cell_size: f64,
    pub n_signal: usize,
    pub n_distractor: usize,
    pub signal_range: f64,
    pub distractor_range: f64,
    pub n_clusters: usize,
    pub cluster_radius: f64,
    pub samples_per_cluster: usize,
    /// Noise standard deviation as a fraction of the clean response sd.
    pub noise_fraction: f64,
    /// Cell-wise measurement noise added to the observed signal bands
    /// (the response is driven by the latent noise-free fields).
    pub predictor_noise: f64,
    pub n_classes: usize,
    pub seed: u64,
}

/// Seed of the checked-in reference benchmark.
pub const DEFAULT_SEED: u64 = 61;

impl BenchmarkSpec {
    /// The shipped configuration: 256x256 grid, 11 clusters, 2 signal and
    /// 2 distractor fields plus coordinates and an elevation-like layer.
    pub fn shipped(task: Task, seed: u64) -> Self {
        Self {
            task,
            ncols: 256,
            nrows: 256,
            cell_size: 1.0,
            n_signal: 2,
            n_distractor: 2,
            signal_range: 8.0,
            distractor_range: 8.0,
            n_clusters: 11,
            cluster_radius: 5.0,
            samples_per_cluster: 40,
            noise_fraction: 0.3,
            predictor_noise: 0.8,
            n_classes: 4,
            seed,
        }
    }
}

fn signal_weight(index: usize) -> f64 {
    match index {
        0 => 1.0,
        1 => -0.5,
        i => 0.5 * if i % 2 == 0 { 1.0 } else { -1.0 },
    }
}

/// Compose the benchmark: autocorrelated predictor stack, clustered
/// samples, and a response that depends on the signal bands only. The
/// coordinate and elevation layers carry zero generative weight.
pub fn make_benchmark(spec: &BenchmarkSpec) -> Result<Benchmark> {
    let field = |range: f64, stream: u64| -> Result<RasterGrid> {
        gaussian_random_field(&FieldSpec {
            ncols: spec.ncols,
            nrows: spec.nrows,
            cell_size: spec.cell_size,
            autocorr_range: range,
            sill: 1.0,
            seed: derive_seed(spec.seed, stream),
        })
    };

    let mut latent_signals: Vec<RasterGrid> = Vec::new();
    for i in 0..spec.n_signal {
        latent_signals.push(field(spec.signal_range, 100 + i as u64)?);
    }

    // Observed signal bands carry cell-wise measurement noise; the response
    // below is driven by the latent noise-free fields.
    let mut bands: Vec<(String, RasterGrid)> = Vec::new();
    let mut signal_bands = Vec::new();
    for (i, latent) in latent_signals.iter().enumerate() {
        let mut observed = latent.clone();
        if spec.predictor_noise > 0.0 {
            let mut rng = seeded(derive_seed(spec.seed, 600 + i as u64));
            for v in &mut observed.values {
                *v += spec.predictor_noise * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let name = format!("sig{}", i + 1);
        bands.push((name.clone(), observed));
        signal_bands.push(name);
    }
    let mut distractor_bands = Vec::new();
    for i in 0..spec.n_distractor {
        let name = format!("dis{}", i + 1);
        bands.push((name.clone(), field(spec.distractor_range, 200 + i as u64)?));
        distractor_bands.push(name);
    }
    // Smoothest admissible range for the elevation-like layer.
    let elevation_range = (spec.ncols.min(spec.nrows) as f64 / 4.0) - 1.0;
    bands.push(("elev".to_string(), field(elevation_range, 300)?));

    let template = bands[0].1.clone();
    let coords = coordinate_layers(&template);
    for (name, grid) in coords.iter() {
        bands.push((name.to_string(), grid.clone()));
    }
    let stack = RasterStack::from_bands(bands)?;

    // Clean response: linear combination of the signal fields plus a
    // threshold term on the first one.
    let step_amplitude = 0.3;
    let step_threshold = 1.0;
    let weights: Vec<f64> = (0..spec.n_signal).map(signal_weight).collect();
    let n_cells = spec.ncols * spec.nrows;
    let mut clean = vec![0.0f64; n_cells];
    for (i, value) in clean.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, latent) in weights.iter().zip(&latent_signals) {
            acc += w * latent.values[i];
        }
        if latent_signals[0].values[i] > step_threshold {
            acc += step_amplitude;
        }
        *value = acc;
    }
    let mean = clean.iter().sum::<f64>() / n_cells as f64;
    let clean_sd =
        (clean.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_cells as f64 - 1.0)).sqrt();
    let noise_sd = spec.noise_fraction * clean_sd;
    let mut rng = seeded(derive_seed(spec.seed, 400));
    let noisy: Vec<f64> = clean
        .iter()
        .map(|v| v + noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();

    // Classification: quantile-bin the noisy response into balanced classes.
    let (class_edges, classes) = match spec.task {
        Task::Regression => (Vec::new(), Vec::new()),
        Task::Classification => {
            if spec.n_classes < 2 {
                return Err(Error::Argument("need at least 2 classes".into()));
            }
            let mut sorted = noisy.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let edges: Vec<f64> = (1..spec.n_classes)
                .map(|i| sorted[i * n_cells / spec.n_classes])
                .collect();
            let labels: Vec<String> =
                (0..spec.n_classes).map(|i| format!("c{i}")).collect();
            (edges, labels)
        }
    };
    let response_values: Vec<f64> = match spec.task {
        Task::Regression => noisy.clone(),
        Task::Classification => noisy
            .iter()
            .map(|&v| class_edges.iter().filter(|&&e| v >= e).count() as f64)
            .collect(),
    };
    let response = RasterGrid::new(
        spec.ncols,
        spec.nrows,
        template.x_min,
        template.y_min,
        spec.cell_size,
        -9999.0,
        response_values,
    )?;

    let design = clustered_design(
        &template,
        &DesignSpec {
            n_clusters: spec.n_clusters,
            cluster_radius: spec.cluster_radius,
            samples_per_cluster: spec.samples_per_cluster,
            seed: derive_seed(spec.seed, 500),
        },
    )?;
    let points: Vec<SamplePoint> = design
        .into_iter()
        .map(|p| {
            let (row, col) = response.cell_of(p.x, p.y).expect("design stays in extent");
            let value = response.get(row, col);
            SamplePoint {
                id: p.id,
                group: p.group,
                x: p.x,
                y: p.y,
                response: match spec.task {
                    Task::Regression => ResponseValue::Value(value),
                    Task::Classification => {
                        ResponseValue::Label(classes[value as usize].clone())
                    }
                },
            }
        })
        .collect();
    let table = extract_at_samples(&stack, &points, spec.task)?;

    Ok(Benchmark {
        table,
        stack,
        response,
        truth: GroundTruth {
            task: spec.task,
            signal_bands,
            distractor_bands,
            coordinate_bands: vec!["coord_x".into(), "coord_y".into()],
            elevation_band: "elev".into(),
            signal_weights: weights,
            step_amplitude,
            step_threshold,
            noise_sd,
            predictor_noise_sd: spec.predictor_noise,
            class_edges,
            classes,
            seed: spec.seed,
        },
    })
}
