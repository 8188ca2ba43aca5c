//! Conditional-flow-matching training of a gradient-boosted vector field
//! and deterministic reverse-ODE sampling. Works in any vector space; the
//! pipelines feed it raw standardized features or latent codes.
//!
//! Two target modes exist. `Icfm` pairs each data row with Gaussian noise
//! along the linear path `x(t) = t*x1 + (1-t)*x0` and regresses the
//! constant velocity `x1 - x0`; sampling integrates that field backward
//! from noise at t = 1 to data at t = 0. `VpResidual` noises rows as
//! `z_t = a_t*z0 + sqrt(1 - a_t^2)*eps` and regresses the denoising
//! direction `(z0 - z_t) / sqrt(1 - a_t^2)`; sampling steps toward the
//! data along that direction on the same grid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ScalerParams;
use crate::error::{Error, Result};
use crate::gbt::{fit_gbt_regressor, GbtParams, GbtRegressor};
use crate::matrix::Matrix;

/// Time grid `i/n_t` for `i = 1..=n_t` with a strictly decreasing noise
/// schedule `a(t) = 1 - (1 - alpha_min) * t`. The grid deliberately
/// excludes t = 0, where `a = 1` would put a zero under the residual
/// target's square root.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseSchedule {
    t: Vec<f64>,
    alpha: Vec<f64>,
    alpha_min: f64,
}

impl NoiseSchedule {
    pub fn linear(n_t: usize, alpha_min: f64) -> Result<Self> {
        if n_t == 0 {
            return Err(Error::InvalidConfig("n_t must be positive".to_string()));
        }
        if !(alpha_min > 0.0 && alpha_min <= 0.05) {
            return Err(Error::InvalidConfig(format!(
                "alpha_min must lie in (0, 0.05], got {alpha_min}"
            )));
        }
        let t: Vec<f64> = (1..=n_t).map(|i| i as f64 / n_t as f64).collect();
        let alpha: Vec<f64> = t.iter().map(|ti| 1.0 - (1.0 - alpha_min) * ti).collect();
        Ok(NoiseSchedule { t, alpha, alpha_min })
    }

    /// Explicit grid for tests and unusual schedules; must be ascending in
    /// t with alpha strictly decreasing inside [0, 1).
    pub fn custom(t: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t.len() != alpha.len() {
            return Err(Error::InvalidConfig(
                "schedule needs matching non-empty t and alpha".to_string(),
            ));
        }
        for w in t.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidConfig("t grid must ascend".to_string()));
            }
        }
        for w in alpha.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::InvalidConfig(
                    "alpha must strictly decrease".to_string(),
                ));
            }
        }
        if alpha.iter().any(|&a| !(0.0..1.0).contains(&a)) {
            return Err(Error::InvalidConfig(
                "alpha values must lie in [0, 1)".to_string(),
            ));
        }
        let alpha_min = *alpha.last().unwrap();
        Ok(NoiseSchedule { t, alpha, alpha_min })
    }

    pub fn n_t(&self) -> usize {
        self.t.len()
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t[k]
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha[k]
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    /// Index of the grid point nearest to an arbitrary time.
    pub fn nearest_index(&self, t: f64) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, &tk) in self.t.iter().enumerate() {
            let d = (t - tk).abs();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowTarget {
    Icfm,
    VpResidual,
}

impl std::fmt::Display for FlowTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FlowTarget::Icfm => write!(f, "icfm"),
            FlowTarget::VpResidual => write!(f, "vp_residual"),
        }
    }
}

/// Training material for every timestep. One Gaussian draw is stored per
/// (row, duplicate) pair and reused across the grid, so a timestep's
/// inputs and targets are materialized on demand instead of all at once.
pub struct TrainingPairs {
    pub z0: Matrix,
    pub noise: Matrix,
    pub schedule: NoiseSchedule,
    pub mode: FlowTarget,
    pub duplicate_k: usize,
}

/// Replicate each row `duplicate_k` times with independent noise draws.
/// Noise for row `i` comes from rng stream `i`, so extending the dataset
/// never changes earlier rows' pairs.
pub fn build_training_pairs(
    z0: &Matrix,
    schedule: &NoiseSchedule,
    mode: FlowTarget,
    duplicate_k: usize,
    seed: u64,
) -> Result<TrainingPairs> {
    if z0.rows() == 0 {
        return Err(Error::EmptyDataset("flow training data".to_string()));
    }
    if duplicate_k < 1 {
        return Err(Error::InvalidConfig(
            "duplicate_k must be at least 1".to_string(),
        ));
    }
    z0.require_finite("flow training data")?;

    let dim = z0.cols();
    let mut noise = Matrix::zeros(z0.rows() * duplicate_k, dim);
    for i in 0..z0.rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for u in 0..duplicate_k {
            let row = noise.row_mut(i * duplicate_k + u);
            for v in row.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        }
    }
    Ok(TrainingPairs {
        z0: z0.clone(),
        noise,
        schedule: schedule.clone(),
        mode,
        duplicate_k,
    })
}

impl TrainingPairs {
    pub fn dim(&self) -> usize {
        self.z0.cols()
    }

    pub fn pair_count(&self) -> usize {
        self.noise.rows()
    }

    /// Materialize (inputs, targets) for grid index `k`.
    pub fn at(&self, k: usize) -> (Matrix, Matrix) {
        let dim = self.dim();
        let n_pairs = self.pair_count();
        let t = self.schedule.t(k);
        let alpha = self.schedule.alpha(k);
        let s = (1.0 - alpha * alpha).sqrt();
        let mut inputs = Matrix::zeros(n_pairs, dim);
        let mut targets = Matrix::zeros(n_pairs, dim);
        for p in 0..n_pairs {
            let x0 = self.z0.row(p / self.duplicate_k);
            let x1 = self.noise.row(p);
            let inp = inputs.row_mut(p);
            for j in 0..dim {
                inp[j] = match self.mode {
                    FlowTarget::Icfm => t * x1[j] + (1.0 - t) * x0[j],
                    FlowTarget::VpResidual => alpha * x0[j] + s * x1[j],
                };
            }
            let inp = inputs.row(p);
            let tgt = targets.row_mut(p);
            for j in 0..dim {
                tgt[j] = match self.mode {
                    FlowTarget::Icfm => x1[j] - x0[j],
                    FlowTarget::VpResidual => (x0[j] - inp[j]) / s,
                };
            }
        }
        (inputs, targets)
    }
}

/// Recover `z0` from a noised input and its residual target; exact
/// algebraic inverse of the `VpResidual` construction.
pub fn vp_invert(z_t: f64, target: f64, alpha: f64) -> f64 {
    z_t + (1.0 - alpha * alpha).sqrt() * target
}

/// One boosted regressor per (timestep, output dimension).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorFieldModel {
    regressors: Vec<GbtRegressor>,
    pub mode: FlowTarget,
    pub schedule: NoiseSchedule,
    pub dim: usize,
    pub duplicate_k: usize,
}

/// Fit the full grid. Slots are independent, so they are trained in
/// parallel with per-slot seeds derived from `seed`.
pub fn fit_vector_field(
    pairs: &TrainingPairs,
    gbt: &GbtParams,
    seed: u64,
) -> Result<VectorFieldModel> {
    let dim = pairs.dim();
    let n_t = pairs.schedule.n_t();

    let per_step: Vec<Result<Vec<GbtRegressor>>> = (0..n_t)
        .into_par_iter()
        .map(|k| {
            let (inputs, targets) = pairs.at(k);
            (0..dim)
                .map(|j| {
                    let params = GbtParams {
                        seed: derive_seed(seed, (k * dim + j) as u64),
                        ..gbt.clone()
                    };
                    fit_gbt_regressor(&inputs, &targets.column(j), &params)
                })
                .collect()
        })
        .collect();

    let mut regressors = Vec::with_capacity(n_t * dim);
    for step in per_step {
        regressors.extend(step?);
    }
    Ok(VectorFieldModel {
        regressors,
        mode: pairs.mode,
        schedule: pairs.schedule.clone(),
        dim,
        duplicate_k: pairs.duplicate_k,
    })
}

/// Mix a stable sub-seed out of a master seed (splitmix64 round).
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(tag.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl VectorFieldModel {
    pub fn regressor_count(&self) -> usize {
        self.regressors.len()
    }

    /// Field value at grid index `k` (no interpolation between steps).
    pub fn eval_at_index(&self, k: usize, z: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.regressors[k * self.dim + j].predict_row(z))
            .collect()
    }

    /// Field value at an arbitrary time, routed to the nearest grid model.
    pub fn eval(&self, t: f64, z: &[f64]) -> Vec<f64> {
        self.eval_at_index(self.schedule.nearest_index(t), z)
    }

    /// Draw `n` rows: Gaussian initial state at t = 1, explicit Euler down
    /// the grid to t = 0. Row `i` uses rng stream `i`, so the first k rows
    /// of `sample(n)` equal `sample(k)` for the same seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Matrix> {
        if self.regressors.is_empty() {
            return Err(Error::InvalidConfig(
                "vector field has no fitted regressors".to_string(),
            ));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let z: Vec<f64> = (0..self.dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                integrate_reverse(
                    |k, state| self.eval_at_index(k, state),
                    &self.schedule,
                    self.mode,
                    z,
                )
            })
            .collect();
        let mut out = Matrix::empty(self.dim);
        for r in &rows {
            out.push_row(r);
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

/// Explicit Euler from t = 1 down to t = 0 over the schedule grid. The
/// field is queried exactly at grid points, highest first. Icfm fields
/// point data-to-noise, so backward integration subtracts them; residual
/// fields point at the data and are added.
pub fn integrate_reverse<F>(
    field: F,
    schedule: &NoiseSchedule,
    mode: FlowTarget,
    mut z: Vec<f64>,
) -> Vec<f64>
where
    F: Fn(usize, &[f64]) -> Vec<f64>,
{
    let n_t = schedule.n_t();
    let dt = 1.0 / n_t as f64;
    for k in (0..n_t).rev() {
        let v = field(k, &z);
        match mode {
            FlowTarget::Icfm => {
                for j in 0..z.len() {
                    z[j] -= dt * v[j];
                }
            }
            FlowTarget::VpResidual => {
                for j in 0..z.len() {
                    z[j] += dt * v[j];
                }
            }
        }
    }
    z
}

/// Raw-space baseline: standardize the minority block, fit an Icfm field
/// on it, sample, and map back through the scaler.
pub fn forest_diffusion_generate(
    x_min: &Matrix,
    count: usize,
    config: &FlowConfig,
    seed: u64,
) -> Result<Matrix> {
    if x_min.rows() < 2 {
        return Err(Error::EmptyDataset(
            "baseline generation needs at least 2 rows".to_string(),
        ));
    }
    if count == 0 {
        return Ok(Matrix::empty(x_min.cols()));
    }
    let scaler = ScalerParams::fit(x_min);
    let z = scaler.transform(x_min);
    let schedule = NoiseSchedule::linear(config.n_t, config.alpha_min)?;
    let pairs = build_training_pairs(
        &z,
        &schedule,
        FlowTarget::Icfm,
        config.duplicate_k,
        derive_seed(seed, 1),
    )?;
    let model = fit_vector_field(&pairs, &config.gbt, derive_seed(seed, 2))?;
    let latent = model.sample(count, derive_seed(seed, 3))?;
    Ok(scaler.inverse(&latent))
}

/// Knobs shared by every flow-fitting call site.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowConfig {
    pub n_t: usize,
    pub duplicate_k: usize,
    pub alpha_min: f64,
    pub gbt: GbtParams,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            n_t: 50,
            duplicate_k: 100,
            alpha_min: 0.01,
            gbt: GbtParams::default(),
        }
    }
}
