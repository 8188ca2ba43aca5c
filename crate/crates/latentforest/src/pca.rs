//! Principal component analysis with variance-ratio component selection.
//!
//! Covariance uses divisor `n`; the eigendecomposition is a cyclic Jacobi
//! sweep, which is plenty at the column counts this crate works with.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Fitted PCA basis: column means, the retained eigenvector matrix
/// (`D x d`, orthonormal columns) and the descending eigenvalues.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
    pub d: usize,
    pub explained_ratio: f64,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.components.rows()
    }

    pub fn to_text(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors-as-columns), unordered.
fn jacobi_eigh(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v[(i, i)] = 1.0;
    }
    let frob: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)] * m[(i, j)])
        .sum::<f64>()
        .sqrt();
    let tol = 1e-14 * frob.max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..n).map(|i| m[(i, i)]).collect();
    (eig, v)
}

/// Fit PCA on a (standardized) matrix, keeping the smallest component
/// count whose cumulative eigenvalue ratio reaches `variance_target`.
pub fn fit_pca(z: &Matrix, variance_target: f64) -> Result<PcaModel> {
    if z.rows() < 2 {
        return Err(Error::EmptyDataset(format!(
            "pca needs at least 2 rows, got {}",
            z.rows()
        )));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "variance_target must be in (0,1], got {variance_target}"
        )));
    }
    z.require_finite("pca input")?;

    let n = z.rows() as f64;
    let dim = z.cols();
    let mean = z.col_means();

    // covariance with divisor n over mean-centered columns
    let mut cov = Matrix::zeros(dim, dim);
    for row in z.iter_rows() {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in i..dim {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let (raw_eig, vectors) = jacobi_eigh(&cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| raw_eig[b].partial_cmp(&raw_eig[a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| raw_eig[i].max(0.0)).collect();

    let total: f64 = eigenvalues.iter().sum();
    let mut d = 1usize;
    if total > 0.0 {
        let mut cum = 0.0;
        for (i, ev) in eigenvalues.iter().enumerate() {
            cum += ev;
            if cum / total >= variance_target {
                d = i + 1;
                break;
            }
            d = i + 1;
        }
    }
    let explained_ratio = if total > 0.0 {
        eigenvalues[..d].iter().sum::<f64>() / total
    } else {
        1.0
    };

    // retained eigenvectors as columns, sign fixed so the entry of largest
    // magnitude is positive
    let mut components = Matrix::zeros(dim, d);
    for (col, &src) in order[..d].iter().enumerate() {
        let mut best = 0usize;
        for k in 0..dim {
            if vectors[(k, src)].abs() > vectors[(best, src)].abs() {
                best = k;
            }
        }
        let sign = if vectors[(best, src)] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..dim {
            components[(k, col)] = sign * vectors[(k, src)];
        }
    }

    Ok(PcaModel {
        mean,
        components,
        eigenvalues: eigenvalues[..d].to_vec(),
        d,
        explained_ratio,
    })
}

/// Project rows onto the retained components: `(Z - mean) V_d`.
pub fn project(m: &PcaModel, z: &Matrix) -> Result<Matrix> {
    if z.cols() != m.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", m.input_dim()),
            found: format!("{}", z.cols()),
        });
    }
    let mut centered = z.clone();
    for i in 0..centered.rows() {
        let row = centered.row_mut(i);
        for j in 0..row.len() {
            row[j] -= m.mean[j];
        }
    }
    Ok(centered.matmul(&m.components))
}

/// Map latent rows back to data space: `L V_d^T + mean`.
pub fn reconstruct(m: &PcaModel, latent: &Matrix) -> Result<Matrix> {
    if latent.cols() != m.d {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", m.d),
            found: format!("{}", latent.cols()),
        });
    }
    let mut out = latent.matmul(&m.components.transpose());
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for j in 0..row.len() {
            row[j] += m.mean[j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn population_variance(v: &[f64]) -> f64 {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
    }

    #[test]
    fn rank_one_data_needs_one_component() {
        let dir = [3.0, 4.0, 0.0];
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| dir.iter().map(|d| d * (i as f64 - 4.5)).collect())
            .collect();
        let m = fit_pca(&Matrix::from_rows(&rows), 0.95).unwrap();
        assert_eq!(m.d, 1);
        assert!(m.explained_ratio >= 0.95);
    }

    #[test]
    fn two_by_two_known_eigenvalues() {
        // four points with exact population covariance [[2,0],[0,1]]
        let z = Matrix::from_rows(&[
            vec![2.0, 0.0],
            vec![-2.0, 0.0],
            vec![0.0, 2f64.sqrt()],
            vec![0.0, -(2f64.sqrt())],
        ]);
        let m = fit_pca(&z, 0.95).unwrap();
        assert_eq!(m.d, 2, "2/3 of variance is below the 0.95 target");
        assert!((m.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!((m.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_target_keeps_every_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = fit_pca(&Matrix::from_rows(&rows), 1.0).unwrap();
        assert_eq!(m.d, 4);
    }

    #[test]
    fn projection_is_linear_and_invertible_at_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let z = Matrix::from_rows(&rows);
        let m = fit_pca(&z, 1.0).unwrap();

        // the column-mean point projects to the origin
        let mean_row = Matrix::from_rows(&[m.mean.clone()]);
        let at_origin = project(&m, &mean_row).unwrap();
        for j in 0..m.d {
            assert!(at_origin[(0, j)].abs() < 1e-10);
        }

        let back = reconstruct(&m, &project(&m, &z).unwrap()).unwrap();
        for i in 0..z.rows() {
            for j in 0..z.cols() {
                assert!((back[(i, j)] - z[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn projected_column_variance_matches_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                vec![3.0 * a + 0.2 * b, a - b, 0.5 * b, a + 2.0 * b]
            })
            .collect();
        let z = Matrix::from_rows(&rows);
        let m = fit_pca(&z, 1.0).unwrap();
        let proj = project(&m, &z).unwrap();
        for j in 0..m.d {
            let var = population_variance(&proj.column(j));
            assert!(
                (var - m.eigenvalues[j]).abs() < 1e-6,
                "column {j}: var {var} vs eigenvalue {}",
                m.eigenvalues[j]
            );
        }
    }

    #[test]
    fn eigenpair_residuals_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let z = Matrix::from_rows(&rows);
        let m = fit_pca(&z, 1.0).unwrap();

        // rebuild the covariance to verify sigma v = lambda v
        let n = z.rows() as f64;
        let mean = z.col_means();
        let dim = z.cols();
        let mut cov = Matrix::zeros(dim, dim);
        for row in z.iter_rows() {
            for i in 0..dim {
                for j in 0..dim {
                    cov[(i, j)] += (row[i] - mean[i]) * (row[j] - mean[j]) / n;
                }
            }
        }
        let trace: f64 = (0..dim).map(|i| cov[(i, i)]).sum();
        let sum_eig: f64 = m.eigenvalues.iter().sum();
        assert!((trace - sum_eig).abs() < 1e-8);

        for c in 0..m.d {
            let v: Vec<f64> = (0..dim).map(|k| m.components[(k, c)]).collect();
            let mut resid = 0.0f64;
            for i in 0..dim {
                let mut sv = 0.0;
                for j in 0..dim {
                    sv += cov[(i, j)] * v[j];
                }
                let r = sv - m.eigenvalues[c] * v[i];
                resid += r * r;
            }
            assert!(resid.sqrt() < 1e-8, "component {c} residual {}", resid.sqrt());
        }

        // orthonormality
        let g = m.components.transpose().matmul(&m.components);
        for i in 0..m.d {
            for j in 0..m.d {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn truncation_error_equals_discarded_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..150)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                let c: f64 = rng.random_range(-0.1..0.1);
                vec![2.0 * a, a + b, b - a, c]
            })
            .collect();
        let z = Matrix::from_rows(&rows);
        let full = fit_pca(&z, 1.0).unwrap();
        let truncated = fit_pca(&z, 0.9).unwrap();
        assert!(truncated.d < full.d);

        let back = reconstruct(&truncated, &project(&truncated, &z).unwrap()).unwrap();
        let n = z.rows() as f64;
        let mut err = 0.0;
        for i in 0..z.rows() {
            for j in 0..z.cols() {
                let d = z[(i, j)] - back[(i, j)];
                err += d * d;
            }
        }
        err /= n;
        let discarded: f64 = full.eigenvalues[truncated.d..].iter().sum();
        assert!(
            (err - discarded).abs() < 1e-6,
            "err {err} vs discarded {discarded}"
        );
    }

    #[test]
    fn shape_errors() {
        let z = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let m = fit_pca(&z, 1.0).unwrap();
        assert!(project(&m, &Matrix::zeros(2, 3)).is_err());
        assert!(reconstruct(&m, &Matrix::zeros(2, 5)).is_err());
        assert!(fit_pca(&Matrix::zeros(1, 2), 0.95).is_err());
    }

    #[test]
    fn text_round_trip() {
        let z = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let m = fit_pca(&z, 1.0).unwrap();
        let again = PcaModel::from_text(&m.to_text().unwrap()).unwrap();
        assert_eq!(m.components, again.components);
    }
}
