//! Seeded synthetic datasets for examples, tests and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::matrix::Matrix;

/// Imbalanced two-Gaussian binary dataset: the majority class sits at the
/// origin with unit spread, the minority at distance `separation` along
/// the all-ones diagonal with spread `minority_spread`. Rows interleave
/// deterministically; labels are 0 = majority, 1 = minority.
pub fn two_gaussians(
    n_major: usize,
    n_minor: usize,
    dim: usize,
    separation: f64,
    minority_spread: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = separation / (dim as f64).sqrt();
    let mut rows = Vec::with_capacity(n_major + n_minor);
    let mut y = Vec::with_capacity(n_major + n_minor);
    for i in 0..n_major + n_minor {
        let minority = i % (n_major + n_minor) >= n_major;
        let row: Vec<f64> = (0..dim)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                if minority {
                    shift + minority_spread * g
                } else {
                    g
                }
            })
            .collect();
        rows.push(row);
        y.push(u8::from(minority));
    }
    Dataset::from_matrix(Matrix::from_rows(&rows), y, "f")
}

/// Mixture of two Gaussian bumps in any dimension, as a plain matrix;
/// used for distribution-recovery checks.
pub fn gaussian_mixture(
    n: usize,
    dim: usize,
    centers: (&[f64], &[f64]),
    spread: f64,
    seed: u64,
) -> Matrix {
    assert_eq!(centers.0.len(), dim);
    assert_eq!(centers.1.len(), dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let c = if i % 2 == 0 { centers.0 } else { centers.1 };
            c.iter()
                .map(|&m| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    m + spread * g
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(&rows)
}

/// Low-rank imbalanced dataset: features are a random mixing of `rank`
/// Gaussian factors plus isotropic noise, so PCA at a 0.95 target retains
/// far fewer than `dim` components. The minority class is shifted along
/// the first factor direction.
pub fn low_rank_imbalanced(
    n_major: usize,
    n_minor: usize,
    dim: usize,
    rank: usize,
    noise: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixing: Vec<Vec<f64>> = (0..rank)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut rows = Vec::with_capacity(n_major + n_minor);
    let mut y = Vec::with_capacity(n_major + n_minor);
    for i in 0..n_major + n_minor {
        let minority = i >= n_major;
        let mut f: Vec<f64> = (0..rank).map(|_| StandardNormal.sample(&mut rng)).collect();
        if minority {
            f[0] += 3.0;
        }
        let row: Vec<f64> = (0..dim)
            .map(|j| {
                let g: f64 = StandardNormal.sample(&mut rng);
                f.iter().zip(&mixing).map(|(fi, m)| fi * m[j]).sum::<f64>() + noise * g
            })
            .collect();
        rows.push(row);
        y.push(u8::from(minority));
    }
    Dataset::from_matrix(Matrix::from_rows(&rows), y, "f")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_labels() {
        let d = two_gaussians(90, 10, 4, 2.0, 1.0, 0);
        assert_eq!(d.n_rows(), 100);
        assert_eq!(d.class_counts(), [90, 10]);
        assert_eq!(d.width(), 4);

        let m = gaussian_mixture(40, 2, (&[-2.0, -2.0], &[2.0, 2.0]), 0.5, 1);
        assert_eq!(m.rows(), 40);

        let lr = low_rank_imbalanced(200, 20, 10, 3, 0.05, 2);
        assert_eq!(lr.class_counts(), [200, 20]);
    }

    #[test]
    fn deterministic() {
        let a = two_gaussians(50, 5, 3, 2.0, 1.0, 7);
        let b = two_gaussians(50, 5, 3, 2.0, 1.0, 7);
        assert_eq!(a.x, b.x);
    }
}
