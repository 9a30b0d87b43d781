//! The first principal component must match a power-iteration reference on
//! the band correlation matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spatialcv::raster::{pca_first_component, RasterGrid, RasterStack};

fn grid(values: Vec<f64>) -> RasterGrid {
    let side = (values.len() as f64).sqrt() as usize;
    RasterGrid::new(side, side, 0.0, 0.0, 1.0, -9999.0, values).unwrap()
}

#[test]
fn first_component_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let n = 144usize;
    let base: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let b1 = base.clone();
    let b2: Vec<f64> = base.iter().map(|v| 0.8 * v + rng.gen_range(-0.4..0.4)).collect();
    let b3: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // One hole shared through the NODATA value of band 1.
    let mut b1 = b1;
    b1[17] = -9999.0;

    let stack = RasterStack::from_bands(vec![
        ("a".into(), grid(b1.clone())),
        ("b".into(), grid(b2.clone())),
        ("c".into(), grid(b3.clone())),
    ])
    .unwrap();
    let pc1 = pca_first_component(&stack).unwrap();

    // Reference: standardize over jointly valid cells, build the correlation
    // matrix, power-iterate for the leading eigenvector.
    let valid: Vec<usize> = (0..n).filter(|&i| b1[i] != -9999.0).collect();
    let bands = [&b1, &b2, &b3];
    let m = valid.len() as f64;
    let standardized: Vec<Vec<f64>> = bands
        .iter()
        .map(|band| {
            let mean = valid.iter().map(|&i| band[i]).sum::<f64>() / m;
            let var = valid.iter().map(|&i| (band[i] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let sd = var.sqrt();
            valid.iter().map(|&i| (band[i] - mean) / sd).collect()
        })
        .collect();
    let mut corr = [[0.0f64; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            corr[a][b] = standardized[a]
                .iter()
                .zip(&standardized[b])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / (m - 1.0);
        }
    }
    let mut v = [1.0f64, 1.0, 1.0];
    for _ in 0..2000 {
        let mut next = [0.0f64; 3];
        for a in 0..3 {
            for b in 0..3 {
                next[a] += corr[a][b] * v[b];
            }
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = [next[0] / norm, next[1] / norm, next[2] / norm];
    }
    // Same sign convention: first nonzero coefficient positive.
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
    }

    for (slot, &i) in valid.iter().enumerate() {
        let expected: f64 = (0..3).map(|a| v[a] * standardized[a][slot]).sum();
        let got = pc1.values[i];
        assert!((got - expected).abs() < 1e-8, "cell {i}: {got} vs {expected}");
    }
    assert!(pc1.is_nodata(pc1.values[17]));
}
