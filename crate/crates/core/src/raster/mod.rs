//! Grid data model and derivation of predictor layers.

mod ascii;
mod derive;
mod expr;
mod predict;

pub use ascii::{read_ascii_grid, write_ascii_grid};
pub use derive::{coordinate_layers, focal_sd, pca_first_component, slope_aspect};
pub use expr::{band_math, read_expression_presets};
pub use predict::predict_surface;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single-band regular grid. Values are row-major with the northernmost
/// row first; `x_min`/`y_min` are the lower-left corner in map units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid {
    pub ncols: usize,
    pub nrows: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub cell_size: f64,
    pub nodata: f64,
    pub values: Vec<f64>,
}

impl RasterGrid {
    pub fn new(
        ncols: usize,
        nrows: usize,
        x_min: f64,
        y_min: f64,
        cell_size: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::Argument("grid dimensions must be positive".into()));
        }
        if cell_size <= 0.0 {
            return Err(Error::Argument("cell_size must be positive".into()));
        }
        if values.len() != ncols * nrows {
            return Err(Error::RasterFormat(format!(
                "expected {} values for a {}x{} grid, got {}",
                ncols * nrows,
                ncols,
                nrows,
                values.len()
            )));
        }
        if values.iter().any(|&v| v != nodata && !v.is_finite()) {
            return Err(Error::RasterFormat(
                "non-NODATA values must be finite".into(),
            ));
        }
        Ok(Self { ncols, nrows, x_min, y_min, cell_size, nodata, values })
    }

    /// A grid filled with a constant value.
    pub fn constant(
        ncols: usize,
        nrows: usize,
        x_min: f64,
        y_min: f64,
        cell_size: f64,
        value: f64,
    ) -> Self {
        Self {
            ncols,
            nrows,
            x_min,
            y_min,
            cell_size,
            nodata: -9999.0,
            values: vec![value; ncols * nrows],
        }
    }

    /// An all-NODATA grid with the same geometry as `self`.
    pub fn blank_like(&self) -> Self {
        Self { values: vec![self.nodata; self.values.len()], ..self.clone() }
    }

    pub fn is_nodata(&self, value: f64) -> bool {
        value == self.nodata || value.is_nan()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.ncols + col] = value;
    }

    /// The (row, col) of the cell owning (x, y), or None when outside the
    /// extent. Ownership is half-open: x in [x_min + col*cs, x_min + (col+1)*cs).
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = (x - self.x_min) / self.cell_size;
        let from_south = (y - self.y_min) / self.cell_size;
        if col < 0.0 || from_south < 0.0 {
            return None;
        }
        let col = col.floor() as usize;
        let from_south = from_south.floor() as usize;
        if col >= self.ncols || from_south >= self.nrows {
            return None;
        }
        Some((self.nrows - 1 - from_south, col))
    }

    /// Map-unit center coordinates of a cell.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let x = self.x_min + (col as f64 + 0.5) * self.cell_size;
        let y = self.y_min + ((self.nrows - 1 - row) as f64 + 0.5) * self.cell_size;
        (x, y)
    }

    pub fn same_geometry(&self, other: &RasterGrid) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && self.x_min == other.x_min
            && self.y_min == other.y_min
            && self.cell_size == other.cell_size
    }

    /// Mean and sample standard deviation over valid cells.
    pub fn stats(&self) -> Option<(f64, f64)> {
        let valid: Vec<f64> =
            self.values.iter().copied().filter(|&v| !self.is_nodata(v)).collect();
        if valid.len() < 2 {
            return None;
        }
        let n = valid.len() as f64;
        let mean = valid.iter().sum::<f64>() / n;
        let var = valid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some((mean, var.sqrt()))
    }
}

/// An ordered collection of named co-registered bands.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterStack {
    bands: Vec<(String, RasterGrid)>,
}

impl RasterStack {
    pub fn new() -> Self {
        Self { bands: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, grid: RasterGrid) -> Result<()> {
        let name = name.into();
        if self.bands.iter().any(|(n, _)| *n == name) {
            return Err(Error::Validation(format!("duplicate band name '{name}'")));
        }
        if let Some((_, first)) = self.bands.first() {
            if !first.same_geometry(&grid) {
                return Err(Error::Validation(format!(
                    "band '{name}' geometry does not match the stack"
                )));
            }
        }
        self.bands.push((name, grid));
        Ok(())
    }

    pub fn from_bands(bands: Vec<(String, RasterGrid)>) -> Result<Self> {
        let mut stack = Self::new();
        for (name, grid) in bands {
            stack.push(name, grid)?;
        }
        Ok(stack)
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.bands.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn band(&self, name: &str) -> Option<&RasterGrid> {
        self.bands.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &RasterGrid)> {
        self.bands.iter().map(|(n, g)| (n.as_str(), g))
    }

    pub fn template(&self) -> Option<&RasterGrid> {
        self.bands.first().map(|(_, g)| g)
    }
}

impl Default for RasterStack {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_ownership_is_half_open() {
        let g = RasterGrid::constant(2, 2, 0.0, 0.0, 1.0, 0.0);
        // Exactly on the internal boundary: belongs to the higher cell.
        assert_eq!(g.cell_of(1.0, 0.5), Some((1, 1)));
        assert_eq!(g.cell_of(0.5, 1.0), Some((0, 0)));
        // Lower-left corner is inside, upper-right corner is not.
        assert_eq!(g.cell_of(0.0, 0.0), Some((1, 0)));
        assert_eq!(g.cell_of(2.0, 2.0), None);
    }

    #[test]
    fn cell_center_round_trips() {
        let g = RasterGrid::constant(3, 4, 10.0, -5.0, 2.5, 0.0);
        for row in 0..4 {
            for col in 0..3 {
                let (x, y) = g.cell_center(row, col);
                assert_eq!(g.cell_of(x, y), Some((row, col)));
            }
        }
    }

    #[test]
    fn value_count_mismatch_rejected() {
        let err = RasterGrid::new(2, 2, 0.0, 0.0, 1.0, -9999.0, vec![1.0, 2.0, 3.0]);
        assert!(err.is_err());
    }

    #[test]
    fn stack_rejects_duplicate_and_misaligned_bands() {
        let g = RasterGrid::constant(2, 2, 0.0, 0.0, 1.0, 0.0);
        let mut stack = RasterStack::new();
        stack.push("a", g.clone()).unwrap();
        assert!(stack.push("a", g.clone()).is_err());
        let shifted = RasterGrid::constant(2, 2, 1.0, 0.0, 1.0, 0.0);
        assert!(stack.push("b", shifted).is_err());
    }
}
