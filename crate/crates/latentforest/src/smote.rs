//! SMOTE baseline: synthetic rows by interpolation between a minority
//! row and one of its k nearest minority neighbors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Exhaustive k-nearest-neighbor lists (self excluded), ties broken by
/// distance then row index.
fn neighbor_lists(x: &Matrix, k: usize) -> Vec<Vec<usize>> {
    let n = x.rows();
    (0..n)
        .map(|i| {
            let mut ds: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = x
                        .row(i)
                        .iter()
                        .zip(x.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d, j)
                })
                .collect();
            ds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            ds.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Generate `count` synthetic rows: pick a minority row, pick one of its
/// k nearest minority neighbors, emit `x + u * (neighbor - x)` with
/// u ~ Uniform(0, 1). Row `i` draws from rng stream `i`, so prefixes are
/// stable across counts for a fixed seed.
pub fn smote_generate(x_min: &Matrix, count: usize, k_neighbors: usize, seed: u64) -> Result<Matrix> {
    if k_neighbors == 0 {
        return Err(Error::InvalidConfig("k_neighbors must be positive".to_string()));
    }
    if x_min.rows() <= k_neighbors {
        return Err(Error::EmptyDataset(format!(
            "smote needs more than k_neighbors = {k_neighbors} minority rows, got {}",
            x_min.rows()
        )));
    }
    let neighbors = neighbor_lists(x_min, k_neighbors);
    let mut out = Matrix::empty(x_min.cols());
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let base = rng.random_range(0..x_min.rows());
        let nb = neighbors[base][rng.random_range(0..k_neighbors)];
        let u: f64 = rng.random_range(0.0..1.0);
        let row: Vec<f64> = x_min
            .row(base)
            .iter()
            .zip(x_min.row(nb))
            .map(|(a, b)| a + u * (b - a))
            .collect();
        out.push_row(&row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolations_stay_on_segments() {
        // two points in 1-D: every synthetic row lies in [0, 1]
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        let s = smote_generate(&x, 50, 1, 3).unwrap();
        for r in s.iter_rows() {
            assert!((0.0..=1.0).contains(&r[0]));
        }
    }

    #[test]
    fn synthetic_rows_lie_between_seed_and_a_true_neighbor() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.1],
            vec![0.2, 0.9],
            vec![2.0, 2.0],
            vec![2.1, 1.9],
        ]);
        let k = 2;
        let s = smote_generate(&x, 40, k, 11).unwrap();
        // brute-force check: each synthetic point must be a convex
        // combination of some row and one of its k nearest neighbors
        let neighbors = neighbor_lists(&x, k);
        for r in s.iter_rows() {
            let mut found = false;
            'outer: for (i, nbs) in neighbors.iter().enumerate() {
                for &j in nbs {
                    let a = x.row(i);
                    let b = x.row(j);
                    // solve r = a + u (b - a) per coordinate; consistent u in [0,1]
                    let mut u: Option<f64> = None;
                    let mut ok = true;
                    for c in 0..2 {
                        let den = b[c] - a[c];
                        if den.abs() < 1e-12 {
                            if (r[c] - a[c]).abs() > 1e-9 {
                                ok = false;
                                break;
                            }
                        } else {
                            let uc = (r[c] - a[c]) / den;
                            match u {
                                None => u = Some(uc),
                                Some(prev) if (prev - uc).abs() > 1e-9 => {
                                    ok = false;
                                    break;
                                }
                                _ => {}
                            }
                        }
                    }
                    if ok {
                        if let Some(uv) = u {
                            if (-1e-9..=1.0 + 1e-9).contains(&uv) {
                                found = true;
                                break 'outer;
                            }
                        } else {
                            found = true; // exact copy of a duplicated pair
                            break 'outer;
                        }
                    }
                }
            }
            assert!(found, "row {r:?} not on any seed-neighbor segment");
        }
    }

    #[test]
    fn deterministic_and_prefix_stable() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.5], vec![1.0], vec![2.0]]);
        let a = smote_generate(&x, 10, 2, 7).unwrap();
        let b = smote_generate(&x, 10, 2, 7).unwrap();
        assert_eq!(a, b);
        let p = smote_generate(&x, 4, 2, 7).unwrap();
        for i in 0..4 {
            assert_eq!(p.row(i), a.row(i));
        }
    }

    #[test]
    fn too_few_rows_rejected() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        assert!(smote_generate(&x, 5, 5, 0).is_err());
        assert!(smote_generate(&x, 5, 0, 0).is_err());
    }
}
