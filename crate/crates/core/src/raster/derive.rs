//! Derived predictor layers: focal statistics, PCA, terrain, coordinates.

use crate::error::{Error, Result};
use crate::raster::{RasterGrid, RasterStack};

/// Sample standard deviation (n-1 divisor) in a centered window.
/// Windows are truncated at the grid edge; cells with fewer than two valid
/// neighbours become NODATA.
pub fn focal_sd(grid: &RasterGrid, window: usize) -> Result<RasterGrid> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::Argument(format!(
            "focal window must be odd and >= 3, got {window}"
        )));
    }
    let half = window / 2;
    let mut out = grid.blank_like();
    for row in 0..grid.nrows {
        for col in 0..grid.ncols {
            let r0 = row.saturating_sub(half);
            let r1 = (row + half).min(grid.nrows - 1);
            let c0 = col.saturating_sub(half);
            let c1 = (col + half).min(grid.ncols - 1);
            let mut n = 0.0;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for r in r0..=r1 {
                for c in c0..=c1 {
                    let v = grid.get(r, c);
                    if !grid.is_nodata(v) {
                        n += 1.0;
                        sum += v;
                        sum_sq += v * v;
                    }
                }
            }
            if n >= 2.0 {
                let var = (sum_sq - sum * sum / n) / (n - 1.0);
                out.set(row, col, var.max(0.0).sqrt());
            }
        }
    }
    Ok(out)
}

/// Projection of the standardized bands onto the leading eigenvector of their
/// correlation matrix. The eigenvector sign is fixed so its first nonzero
/// coefficient is positive. Cells that are NODATA in any band stay NODATA.
pub fn pca_first_component(stack: &RasterStack) -> Result<RasterGrid> {
    if stack.len() < 2 {
        return Err(Error::Argument("PCA requires at least two bands".into()));
    }
    let template = stack.template().expect("non-empty");
    let n_cells = template.values.len();
    let bands: Vec<(&str, &RasterGrid)> = stack.iter().collect();

    // Cells valid in every band.
    let valid: Vec<usize> = (0..n_cells)
        .filter(|&i| bands.iter().all(|(_, g)| !g.is_nodata(g.values[i])))
        .collect();
    if valid.len() < 2 {
        return Err(Error::Argument(
            "PCA requires at least two cells valid in all bands".into(),
        ));
    }

    // Standardize each band over the jointly valid cells.
    let n = valid.len() as f64;
    let mut means = Vec::with_capacity(bands.len());
    let mut sds = Vec::with_capacity(bands.len());
    for (name, g) in &bands {
        let mean = valid.iter().map(|&i| g.values[i]).sum::<f64>() / n;
        let var = valid.iter().map(|&i| (g.values[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        if var <= 0.0 {
            return Err(Error::DegenerateBand(name.to_string()));
        }
        means.push(mean);
        sds.push(var.sqrt());
    }

    // Correlation matrix of the standardized bands.
    let p = bands.len();
    let mut corr = vec![vec![0.0f64; p]; p];
    for a in 0..p {
        for b in a..p {
            let (_, ga) = bands[a];
            let (_, gb) = bands[b];
            let mut s = 0.0;
            for &i in &valid {
                s += (ga.values[i] - means[a]) / sds[a] * ((gb.values[i] - means[b]) / sds[b]);
            }
            let c = s / (n - 1.0);
            corr[a][b] = c;
            corr[b][a] = c;
        }
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(&corr);
    let lead = (0..p)
        .max_by(|&a, &b| eigenvalues[a].partial_cmp(&eigenvalues[b]).expect("finite"))
        .expect("non-empty");
    let mut loading: Vec<f64> = (0..p).map(|r| eigenvectors[r][lead]).collect();
    if let Some(&first) = loading.iter().find(|v| v.abs() > 1e-12) {
        if first < 0.0 {
            for v in &mut loading {
                *v = -*v;
            }
        }
    }

    let mut out = template.blank_like();
    for &i in &valid {
        let mut proj = 0.0;
        for a in 0..p {
            let (_, g) = bands[a];
            proj += loading[a] * (g.values[i] - means[a]) / sds[a];
        }
        out.values[i] = proj;
    }
    Ok(out)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns (eigenvalues, eigenvectors as columns).
fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0f64; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

const FLAT_EPS: f64 = 1e-12;

/// Horn 3x3 slope (radians, [0, pi/2)) and aspect (radians, [0, 2*pi),
/// clockwise from north, the direction the surface faces downslope).
/// Border cells are NODATA in both outputs; flat cells get slope 0 and
/// aspect NODATA.
pub fn slope_aspect(dem: &RasterGrid) -> Result<(RasterGrid, RasterGrid)> {
    if dem.ncols < 3 || dem.nrows < 3 {
        return Err(Error::Argument("slope/aspect needs at least a 3x3 grid".into()));
    }
    let mut slope = dem.blank_like();
    let mut aspect = dem.blank_like();
    let cs = dem.cell_size;
    for row in 1..dem.nrows - 1 {
        for col in 1..dem.ncols - 1 {
            // Row 0 is the northern edge, so row-1 is the northern neighbour.
            let nw = dem.get(row - 1, col - 1);
            let n = dem.get(row - 1, col);
            let ne = dem.get(row - 1, col + 1);
            let w = dem.get(row, col - 1);
            let e = dem.get(row, col + 1);
            let sw = dem.get(row + 1, col - 1);
            let s = dem.get(row + 1, col);
            let se = dem.get(row + 1, col + 1);
            if [nw, n, ne, w, e, sw, s, se].iter().any(|&v| dem.is_nodata(v)) {
                continue;
            }
            let gx = ((ne + 2.0 * e + se) - (nw + 2.0 * w + sw)) / (8.0 * cs);
            let gy = ((nw + 2.0 * n + ne) - (sw + 2.0 * s + se)) / (8.0 * cs);
            let magnitude = (gx * gx + gy * gy).sqrt();
            slope.set(row, col, magnitude.atan());
            if magnitude >= FLAT_EPS {
                // Downslope direction, clockwise from north.
                let mut az = (-gx).atan2(-gy);
                if az < 0.0 {
                    az += 2.0 * std::f64::consts::PI;
                }
                aspect.set(row, col, az);
            }
        }
    }
    Ok((slope, aspect))
}

/// Two bands holding every cell's center coordinates.
pub fn coordinate_layers(template: &RasterGrid) -> RasterStack {
    let mut coord_x = template.blank_like();
    let mut coord_y = template.blank_like();
    for row in 0..template.nrows {
        for col in 0..template.ncols {
            let (x, y) = template.cell_center(row, col);
            coord_x.set(row, col, x);
            coord_y.set(row, col, y);
        }
    }
    RasterStack::from_bands(vec![
        ("coord_x".to_string(), coord_x),
        ("coord_y".to_string(), coord_y),
    ])
    .expect("geometry shared by construction")
}
