//! Feedforward autoencoder trained by hand-rolled backprop and plain
//! minibatch SGD. One ReLU hidden layer of size max(2*latent, input) on
//! each side, identity outputs at the latent and the reconstruction.
//!
//! Parameters live in one flat buffer so the SGD step, text persistence
//! and the finite-difference gradient check all work on a single vector.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(
                "epochs, batch_size and learning_rate must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Default latent width: half the input dimension, rounded up, at least 2.
pub fn default_latent_dim(input_dim: usize) -> usize {
    input_dim.div_ceil(2).max(2).min(input_dim.max(1))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpAutoencoder {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    params: Vec<f64>,
}

/// Loss history of one training run; the loss is the mean over rows of
/// the squared reconstruction norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub initial_mse: f64,
    pub final_mse: f64,
    pub epoch_mse: Vec<f64>,
}

// flat-buffer layout: [we1, be1, we2, be2, wd1, bd1, wd2, bd2]
struct Layout {
    we1: usize,
    be1: usize,
    we2: usize,
    be2: usize,
    wd1: usize,
    bd1: usize,
    wd2: usize,
    bd2: usize,
    total: usize,
}

fn layout(input: usize, hidden: usize, latent: usize) -> Layout {
    let we1 = 0;
    let be1 = we1 + input * hidden;
    let we2 = be1 + hidden;
    let be2 = we2 + hidden * latent;
    let wd1 = be2 + latent;
    let bd1 = wd1 + latent * hidden;
    let wd2 = bd1 + hidden;
    let bd2 = wd2 + hidden * input;
    Layout {
        we1,
        be1,
        we2,
        be2,
        wd1,
        bd1,
        wd2,
        bd2,
        total: bd2 + input,
    }
}

/// y = x W + b with W stored row-major as (n_in x n_out).
fn dense_forward(x: &[f64], w: &[f64], b: &[f64], out: &mut [f64]) {
    let n_out = b.len();
    out.copy_from_slice(b);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &w[i * n_out..(i + 1) * n_out];
        for j in 0..n_out {
            out[j] += xi * row[j];
        }
    }
}

/// Backward through y = x W + b: accumulates dW and db and fills dx.
fn dense_backward(
    x: &[f64],
    w: &[f64],
    d_out: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    d_in: &mut [f64],
) {
    let n_out = d_out.len();
    for j in 0..n_out {
        gb[j] += d_out[j];
    }
    for (i, &xi) in x.iter().enumerate() {
        let grow = &mut gw[i * n_out..(i + 1) * n_out];
        let wrow = &w[i * n_out..(i + 1) * n_out];
        let mut acc = 0.0;
        for j in 0..n_out {
            grow[j] += xi * d_out[j];
            acc += wrow[j] * d_out[j];
        }
        d_in[i] = acc;
    }
}

fn relu_inplace(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

struct RowCache {
    h_pre: Vec<f64>,
    h: Vec<f64>,
    z: Vec<f64>,
    g_pre: Vec<f64>,
    g: Vec<f64>,
    xhat: Vec<f64>,
}

impl MlpAutoencoder {
    /// Fresh network with uniform +-sqrt(6/(fan_in+fan_out)) weights and
    /// zero biases.
    pub fn init(input_dim: usize, latent_dim: usize, seed: u64) -> Result<Self> {
        if latent_dim < 1 || latent_dim > input_dim {
            return Err(Error::InvalidConfig(format!(
                "latent_dim must be in 1..={input_dim}, got {latent_dim}"
            )));
        }
        let hidden_dim = (2 * latent_dim).max(input_dim);
        let lay = layout(input_dim, hidden_dim, latent_dim);
        let mut params = vec![0.0; lay.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init_matrix = |start: usize, fan_in: usize, fan_out: usize| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut params[start..start + fan_in * fan_out] {
                *v = rng.random_range(-bound..bound);
            }
        };
        init_matrix(lay.we1, input_dim, hidden_dim);
        init_matrix(lay.we2, hidden_dim, latent_dim);
        init_matrix(lay.wd1, latent_dim, hidden_dim);
        init_matrix(lay.wd2, hidden_dim, input_dim);
        Ok(MlpAutoencoder {
            input_dim,
            hidden_dim,
            latent_dim,
            params,
        })
    }

    fn layout(&self) -> Layout {
        layout(self.input_dim, self.hidden_dim, self.latent_dim)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len());
        self.params.copy_from_slice(params);
    }

    fn forward_row(&self, x: &[f64]) -> RowCache {
        let lay = self.layout();
        let p = &self.params;
        let mut h_pre = vec![0.0; self.hidden_dim];
        dense_forward(
            x,
            &p[lay.we1..lay.be1],
            &p[lay.be1..lay.we2],
            &mut h_pre,
        );
        let mut h = h_pre.clone();
        relu_inplace(&mut h);
        let mut z = vec![0.0; self.latent_dim];
        dense_forward(&h, &p[lay.we2..lay.be2], &p[lay.be2..lay.wd1], &mut z);
        let mut g_pre = vec![0.0; self.hidden_dim];
        dense_forward(&z, &p[lay.wd1..lay.bd1], &p[lay.bd1..lay.wd2], &mut g_pre);
        let mut g = g_pre.clone();
        relu_inplace(&mut g);
        let mut xhat = vec![0.0; self.input_dim];
        dense_forward(&g, &p[lay.wd2..lay.bd2], &p[lay.bd2..], &mut xhat);
        RowCache {
            h_pre,
            h,
            z,
            g_pre,
            g,
            xhat,
        }
    }

    /// Mean over rows of the squared reconstruction norm, plus the full
    /// parameter gradient.
    pub fn loss_and_grad(&self, x: &Matrix, rows: &[usize]) -> (f64, Vec<f64>) {
        let lay = self.layout();
        let p = &self.params;
        let mut grad = vec![0.0; p.len()];
        let inv_b = 1.0 / rows.len().max(1) as f64;
        let mut loss = 0.0;

        let mut d_xhat = vec![0.0; self.input_dim];
        let mut d_g = vec![0.0; self.hidden_dim];
        let mut d_z = vec![0.0; self.latent_dim];
        let mut d_h = vec![0.0; self.hidden_dim];
        let mut d_x = vec![0.0; self.input_dim];

        for &r in rows {
            let row = x.row(r);
            let c = self.forward_row(row);
            for j in 0..self.input_dim {
                let e = c.xhat[j] - row[j];
                loss += e * e * inv_b;
                d_xhat[j] = 2.0 * e * inv_b;
            }
            let (gw2, rest) = grad[lay.wd2..].split_at_mut(lay.bd2 - lay.wd2);
            dense_backward(&c.g, &p[lay.wd2..lay.bd2], &d_xhat, gw2, rest, &mut d_g);
            for i in 0..self.hidden_dim {
                if c.g_pre[i] <= 0.0 {
                    d_g[i] = 0.0;
                }
            }
            {
                let (gw1, rest) = grad[lay.wd1..lay.wd2].split_at_mut(lay.bd1 - lay.wd1);
                dense_backward(&c.z, &p[lay.wd1..lay.bd1], &d_g, gw1, rest, &mut d_z);
            }
            {
                let (gw2e, rest) = grad[lay.we2..lay.wd1].split_at_mut(lay.be2 - lay.we2);
                dense_backward(&c.h, &p[lay.we2..lay.be2], &d_z, gw2e, rest, &mut d_h);
            }
            for i in 0..self.hidden_dim {
                if c.h_pre[i] <= 0.0 {
                    d_h[i] = 0.0;
                }
            }
            {
                let (gw1e, rest) = grad[lay.we1..lay.we2].split_at_mut(lay.be1 - lay.we1);
                dense_backward(row, &p[lay.we1..lay.be1], &d_h, gw1e, rest, &mut d_x);
            }
        }
        (loss, grad)
    }

    /// Reconstruction loss over all rows.
    pub fn mse(&self, x: &Matrix) -> f64 {
        let mut loss = 0.0;
        for row in x.iter_rows() {
            let c = self.forward_row(row);
            for j in 0..self.input_dim {
                let e = c.xhat[j] - row[j];
                loss += e * e;
            }
        }
        loss / x.rows().max(1) as f64
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", self.input_dim),
                found: format!("{}", x.cols()),
            });
        }
        let mut out = Matrix::empty(self.latent_dim);
        for row in x.iter_rows() {
            out.push_row(&self.forward_row(row).z);
        }
        Ok(out)
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.latent_dim {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", self.latent_dim),
                found: format!("{}", z.cols()),
            });
        }
        let lay = self.layout();
        let p = &self.params;
        let mut out = Matrix::empty(self.input_dim);
        let mut g_pre = vec![0.0; self.hidden_dim];
        let mut xhat = vec![0.0; self.input_dim];
        for row in z.iter_rows() {
            dense_forward(row, &p[lay.wd1..lay.bd1], &p[lay.bd1..lay.wd2], &mut g_pre);
            relu_inplace(&mut g_pre);
            dense_forward(&g_pre, &p[lay.wd2..lay.bd2], &p[lay.bd2..], &mut xhat);
            out.push_row(&xhat);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Minibatch SGD on the reconstruction loss. Deterministic per seed;
/// divergence (non-finite loss) aborts with the epoch index.
pub fn fit_autoencoder(
    x: &Matrix,
    latent_dim: usize,
    cfg: &TrainConfig,
) -> Result<(MlpAutoencoder, FitReport)> {
    cfg.validate()?;
    if x.rows() == 0 {
        return Err(Error::EmptyDataset("autoencoder training".to_string()));
    }
    x.require_finite("autoencoder training data")?;

    let mut model = MlpAutoencoder::init(x.cols(), latent_dim, cfg.seed)?;
    let batch = cfg.batch_size.min(x.rows());
    let initial_mse = model.mse(x);
    let mut epoch_mse = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(crate::flow::derive_seed(cfg.seed, 0xAE));

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        for chunk in order.chunks(batch) {
            let (loss, grad) = model.loss_and_grad(x, chunk);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
            epoch_loss += loss;
            batches += 1.0;
        }
        epoch_mse.push(epoch_loss / batches);
    }

    let final_mse = model.mse(x);
    if !final_mse.is_finite() {
        return Err(Error::Diverged { epoch: cfg.epochs });
    }
    Ok((
        model,
        FitReport {
            initial_mse,
            final_mse,
            epoch_mse,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_lowrank(n: usize, dim: usize, rank: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mixing: Vec<Vec<f64>> = (0..rank)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let f: Vec<f64> = (0..rank)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                (0..dim)
                    .map(|j| f.iter().zip(&mixing).map(|(fi, m)| fi * m[j]).sum())
                    .collect()
            })
            .collect();
        Matrix::from_rows(&rows)
    }

    #[test]
    fn memorizes_a_single_point() {
        let row = vec![0.5, -0.25, 1.0, 0.75];
        let x = Matrix::from_rows(&vec![row; 96]);
        let (_, report) = fit_autoencoder(&x, 2, &TrainConfig::default()).unwrap();
        assert!(report.final_mse <= 1e-4, "final mse {}", report.final_mse);
    }

    #[test]
    fn compresses_lowrank_gaussians() {
        let x = gaussian_lowrank(128, 8, 4, 3);
        let (_, report) = fit_autoencoder(&x, 4, &TrainConfig::default()).unwrap();
        assert!(
            report.final_mse <= report.initial_mse / 5.0,
            "initial {} final {}",
            report.initial_mse,
            report.final_mse
        );
    }

    #[test]
    fn near_identity_at_full_latent_width() {
        let x = gaussian_lowrank(1024, 4, 4, 5);
        let (model, report) = fit_autoencoder(&x, 4, &TrainConfig::default()).unwrap();
        assert!(report.final_mse <= 0.05, "mse {}", report.final_mse);
        let z = model.encode(&x).unwrap();
        let back = model.decode(&z).unwrap();
        let mut mse = 0.0;
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let e = back[(i, j)] - x[(i, j)];
                mse += e * e;
            }
        }
        mse /= x.rows() as f64;
        assert!((mse - report.final_mse).abs() < 1e-9);
    }

    #[test]
    fn zero_weights_encode_to_zero_and_relu_clamps() {
        let mut model = MlpAutoencoder::init(3, 2, 0).unwrap();
        model.set_params(&vec![0.0; model.params().len()]);
        let z = model.encode(&Matrix::from_rows(&[vec![1.0, -2.0, 3.0]])).unwrap();
        assert_eq!(z.row(0), &[0.0, 0.0]);

        // one negative pre-activation: relu zeroes it before the latent map
        let mut p = vec![0.0; model.params().len()];
        let lay = layout(3, model.hidden_dim, 2);
        p[lay.we1] = -1.0; // x0 -> hidden0 with weight -1
        p[lay.we2] = 1.0; // hidden0 -> latent0
        model.set_params(&p);
        let pos = model.encode(&Matrix::from_rows(&[vec![2.0, 0.0, 0.0]])).unwrap();
        assert_eq!(pos[(0, 0)], 0.0, "negative pre-activation must clamp");
        let neg = model.encode(&Matrix::from_rows(&[vec![-2.0, 0.0, 0.0]])).unwrap();
        assert_eq!(neg[(0, 0)], 2.0);
    }

    #[test]
    fn decode_of_zero_latent_is_output_bias() {
        let mut model = MlpAutoencoder::init(3, 2, 0).unwrap();
        let mut p = vec![0.0; model.params().len()];
        let lay = layout(3, model.hidden_dim, 2);
        p[lay.bd2] = 0.5;
        p[lay.bd2 + 1] = -0.5;
        p[lay.bd2 + 2] = 1.5;
        model.set_params(&p);
        let out = model.decode(&Matrix::from_rows(&[vec![0.0, 0.0]])).unwrap();
        assert_eq!(out.row(0), &[0.5, -0.5, 1.5]);
    }

    #[test]
    fn encode_is_row_order_equivariant() {
        let x = gaussian_lowrank(20, 5, 3, 9);
        let (model, _) = fit_autoencoder(
            &x,
            3,
            &TrainConfig {
                epochs: 5,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let z = model.encode(&x).unwrap();
        let rev_rows: Vec<Vec<f64>> = (0..20).rev().map(|i| x.row(i).to_vec()).collect();
        let z_rev = model.encode(&Matrix::from_rows(&rev_rows)).unwrap();
        for i in 0..20 {
            assert_eq!(z.row(i), z_rev.row(19 - i));
        }
    }

    #[test]
    fn same_seed_identical_weights() {
        let x = gaussian_lowrank(64, 6, 3, 11);
        let cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        let (a, _) = fit_autoencoder(&x, 3, &cfg).unwrap();
        let (b, _) = fit_autoencoder(&x, 3, &cfg).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let x = gaussian_lowrank(64, 6, 3, 13);
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 1e4,
            ..TrainConfig::default()
        };
        match fit_autoencoder(&x, 3, &cfg) {
            Err(Error::Diverged { epoch }) => assert!(epoch < 50),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_latent_width() {
        let x = gaussian_lowrank(10, 4, 2, 1);
        assert!(fit_autoencoder(&x, 0, &TrainConfig::default()).is_err());
        assert!(fit_autoencoder(&x, 5, &TrainConfig::default()).is_err());
    }

    #[test]
    fn default_latent_dim_rule() {
        assert_eq!(default_latent_dim(8), 4);
        assert_eq!(default_latent_dim(9), 5);
        assert_eq!(default_latent_dim(3), 2);
        assert_eq!(default_latent_dim(2), 2);
        assert_eq!(default_latent_dim(1), 1);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let x = gaussian_lowrank(5, 4, 3, 17);
        let mut model = MlpAutoencoder::init(4, 2, 21).unwrap();
        let rows: Vec<usize> = (0..5).collect();
        let (_, grad) = model.loss_and_grad(&x, &rows);
        let eps = 1e-5;
        let base = model.params().to_vec();
        let mut worst = 0.0f64;
        for i in 0..base.len() {
            let mut plus = base.clone();
            plus[i] += eps;
            model.set_params(&plus);
            let (lp, _) = model.loss_and_grad(&x, &rows);
            let mut minus = base.clone();
            minus[i] -= eps;
            model.set_params(&minus);
            let (lm, _) = model.loss_and_grad(&x, &rows);
            let numeric = (lp - lm) / (2.0 * eps);
            let denom = (grad[i].abs() + numeric.abs()).max(1e-8);
            worst = worst.max((grad[i] - numeric).abs() / denom);
        }
        model.set_params(&base);
        assert!(worst <= 1e-4, "worst relative gradient error {worst}");
    }
}

