//! Apply a trained forest across a raster stack.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::raster::{RasterGrid, RasterStack};

/// Per-cell model prediction over the stack: class index (as a real) for
/// classification, regression value otherwise. Cells with NODATA in any
/// model band stay NODATA.
pub fn predict_surface(model: &Forest, stack: &RasterStack) -> Result<RasterGrid> {
    let missing: Vec<String> = model
        .feature_names
        .iter()
        .filter(|name| stack.band(name).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::FeatureMismatch(missing));
    }
    let template = stack
        .template()
        .ok_or_else(|| Error::Argument("cannot predict over an empty stack".into()))?;
    let bands: Vec<&RasterGrid> = model
        .feature_names
        .iter()
        .map(|name| stack.band(name).expect("checked above"))
        .collect();

    let mut out = template.blank_like();
    let nodata = out.nodata;
    let ncols = out.ncols;
    // Row-parallel; each output cell depends only on its own inputs.
    out.values
        .par_chunks_mut(ncols)
        .enumerate()
        .try_for_each(|(row, out_row)| -> Result<()> {
            let mut features = vec![0.0f64; bands.len()];
            for (col, cell) in out_row.iter_mut().enumerate() {
                let mut valid = true;
                for (j, band) in bands.iter().enumerate() {
                    let v = band.get(row, col);
                    if band.is_nodata(v) {
                        valid = false;
                        break;
                    }
                    features[j] = v;
                }
                *cell = if valid { model.predict(&features)? } else { nodata };
            }
            Ok(())
        })?;
    Ok(out)
}
