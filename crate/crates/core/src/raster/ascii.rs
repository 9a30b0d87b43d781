//! ESRI ASCII grid reader/writer.
//!
//! Six-line header (ncols, nrows, xllcorner, yllcorner, cellsize,
//! NODATA_value; keys case-insensitive), then whitespace-separated values,
//! north row first.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::RasterGrid;

pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<RasterGrid> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);

    let mut ncols: Option<usize> = None;
    let mut nrows: Option<usize> = None;
    let mut x_min: Option<f64> = None;
    let mut y_min: Option<f64> = None;
    let mut cell_size: Option<f64> = None;
    let mut nodata: Option<f64> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut header_done = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else { continue };

        if !header_done {
            let key = first.to_ascii_lowercase();
            let header_value = |tokens: &mut dyn Iterator<Item = &str>| -> Result<f64> {
                let raw = tokens.next().ok_or_else(|| {
                    Error::RasterFormat(format!("line {}: header key '{key}' has no value", lineno + 1))
                })?;
                raw.parse::<f64>().map_err(|_| {
                    Error::RasterFormat(format!("line {}: cannot parse '{raw}' for '{key}'", lineno + 1))
                })
            };
            match key.as_str() {
                "ncols" => {
                    ncols = Some(header_value(&mut tokens)? as usize);
                    continue;
                }
                "nrows" => {
                    nrows = Some(header_value(&mut tokens)? as usize);
                    continue;
                }
                "xllcorner" => {
                    x_min = Some(header_value(&mut tokens)?);
                    continue;
                }
                "yllcorner" => {
                    y_min = Some(header_value(&mut tokens)?);
                    continue;
                }
                "cellsize" => {
                    cell_size = Some(header_value(&mut tokens)?);
                    continue;
                }
                "nodata_value" => {
                    nodata = Some(header_value(&mut tokens)?);
                    continue;
                }
                _ => header_done = true,
            }
        }

        for token in std::iter::once(first).chain(tokens) {
            let v = token.parse::<f64>().map_err(|_| {
                Error::RasterFormat(format!(
                    "line {}, value {}: unparsable token '{token}'",
                    lineno + 1,
                    values.len() + 1
                ))
            })?;
            values.push(v);
        }
    }

    let missing = |key: &str| Error::RasterFormat(format!("missing header key '{key}'"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let x_min = x_min.ok_or_else(|| missing("xllcorner"))?;
    let y_min = y_min.ok_or_else(|| missing("yllcorner"))?;
    let cell_size = cell_size.ok_or_else(|| missing("cellsize"))?;
    let nodata = nodata.unwrap_or(-9999.0);

    RasterGrid::new(ncols, nrows, x_min, y_min, cell_size, nodata, values)
}

pub fn write_ascii_grid(grid: &RasterGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);

    writeln!(w, "ncols {}", grid.ncols).map_err(io_err)?;
    writeln!(w, "nrows {}", grid.nrows).map_err(io_err)?;
    writeln!(w, "xllcorner {}", fmt_f64(grid.x_min)).map_err(io_err)?;
    writeln!(w, "yllcorner {}", fmt_f64(grid.y_min)).map_err(io_err)?;
    writeln!(w, "cellsize {}", fmt_f64(grid.cell_size)).map_err(io_err)?;
    writeln!(w, "NODATA_value {}", fmt_f64(grid.nodata)).map_err(io_err)?;
    for row in 0..grid.nrows {
        let mut line = String::new();
        for col in 0..grid.ncols {
            if col > 0 {
                line.push(' ');
            }
            line.push_str(&fmt_f64(grid.get(row, col)));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Shortest representation that parses back to the same f64.
fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:e}");
    }
    s
}
