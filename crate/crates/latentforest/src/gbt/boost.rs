//! Gradient boosting: squared-error regression stumps-to-trees for the
//! flow vector field, and a logistic-deviance classifier for evaluation.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::tree::{fit_regression_tree, Node, RegTreeParams, SortedFeatures};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_estimators: 50,
            learning_rate: 1.0,
            max_depth: 5,
            min_child_weight: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

/// Additive ensemble: prediction = base_score + lr * sum of tree outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbtRegressor {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Node>,
    pub n_features: usize,
    /// Training MSE after each boosting round.
    pub train_mse: Vec<f64>,
}

impl GbtRegressor {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.n_features),
                found: format!("{}", x.cols()),
            });
        }
        Ok(x.iter_rows().map(|row| self.predict_row(row)).collect())
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut acc = self.base_score;
        for tree in &self.trees {
            acc += self.learning_rate * tree.predict_row(row);
        }
        acc
    }

    pub fn to_text(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_training_input(x: &Matrix, y_len: usize) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::EmptyDataset("tree training".to_string()));
    }
    if x.rows() < 2 {
        return Err(Error::EmptyDataset(
            "tree training needs at least 2 rows".to_string(),
        ));
    }
    if x.rows() != y_len {
        return Err(Error::ShapeMismatch {
            expected: format!("{} targets", x.rows()),
            found: format!("{y_len}"),
        });
    }
    x.require_finite("training features")
}

/// Per-round row selection: all rows at subsample 1, otherwise a seeded
/// draw without replacement.
fn round_lists(
    sorted: &SortedFeatures,
    n: usize,
    subsample: f64,
    seed: u64,
    round: usize,
) -> Option<Vec<Vec<u32>>> {
    if subsample >= 1.0 {
        return None;
    }
    let take = ((subsample * n as f64).floor() as usize).clamp(2, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round as u64 + 1);
    let mut counts = vec![0u32; n];
    for id in sample(&mut rng, n, take) {
        counts[id] = 1;
    }
    Some(sorted.restrict(&counts))
}

/// Stagewise least-squares boosting; base score is the target mean and
/// each round fits the current residuals.
pub fn fit_gbt_regressor(x: &Matrix, y: &[f64], params: &GbtParams) -> Result<GbtRegressor> {
    check_training_input(x, y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training targets".to_string()));
    }

    let n = x.rows();
    let base_score = y.iter().sum::<f64>() / n as f64;
    let sorted = SortedFeatures::new(x);
    let tree_params = RegTreeParams {
        max_depth: params.max_depth,
        min_child_weight: params.min_child_weight,
        leaf_lambda: 0.0,
    };
    let hess = vec![1.0; n];

    let mut pred = vec![base_score; n];
    let mut residual: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut train_mse = Vec::with_capacity(params.n_estimators);

    for round in 0..params.n_estimators {
        let lists = round_lists(&sorted, n, params.subsample, params.seed, round);
        let tree = fit_regression_tree(
            x,
            &residual,
            &hess,
            lists.as_deref().unwrap_or(&sorted.order),
            &tree_params,
        );
        for i in 0..n {
            pred[i] += params.learning_rate * tree.predict_row(x.row(i));
            residual[i] = y[i] - pred[i];
        }
        train_mse.push(residual.iter().map(|r| r * r).sum::<f64>() / n as f64);
        trees.push(tree);
    }

    Ok(GbtRegressor {
        base_score,
        learning_rate: params.learning_rate,
        trees,
        n_features: x.cols(),
        train_mse,
    })
}

/// Free-function prediction mirror of [`GbtRegressor::predict`].
pub fn predict_gbt(model: &GbtRegressor, x: &Matrix) -> Result<Vec<f64>> {
    model.predict(x)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbtClassifierParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub reg_lambda: f64,
    pub seed: u64,
}

impl Default for GbtClassifierParams {
    fn default() -> Self {
        GbtClassifierParams {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 6,
            min_child_weight: 1.0,
            subsample: 1.0,
            reg_lambda: 1.0,
            seed: 42,
        }
    }
}

/// Boosted log-odds model with a logistic link. Trees fit the deviance
/// gradient with squared-error split search; leaves take a Newton step
/// G/(H + lambda), so `min_child_weight` bounds the hessian mass p(1-p)
/// per leaf.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbtClassifier {
    pub base_log_odds: f64,
    pub learning_rate: f64,
    pub trees: Vec<Node>,
    pub n_features: usize,
    /// Training log-loss after each boosting round.
    pub train_logloss: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl GbtClassifier {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.n_features),
                found: format!("{}", x.cols()),
            });
        }
        Ok(x.iter_rows()
            .map(|row| {
                let mut f = self.base_log_odds;
                for tree in &self.trees {
                    f += self.learning_rate * tree.predict_row(row);
                }
                sigmoid(f)
            })
            .collect())
    }

    /// Hard labels at the 0.5 probability threshold.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect())
    }

    pub fn to_text(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn fit_gbt_classifier(
    x: &Matrix,
    y: &[u8],
    params: &GbtClassifierParams,
) -> Result<GbtClassifier> {
    check_training_input(x, y.len())?;

    let n = x.rows();
    let pos = y.iter().filter(|&&l| l == 1).count() as f64;
    let p0 = (pos / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_log_odds = (p0 / (1.0 - p0)).ln();
    let sorted = SortedFeatures::new(x);
    let tree_params = RegTreeParams {
        max_depth: params.max_depth,
        min_child_weight: params.min_child_weight,
        leaf_lambda: params.reg_lambda,
    };

    let mut f = vec![base_log_odds; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut train_logloss = Vec::with_capacity(params.n_estimators);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for round in 0..params.n_estimators {
        for i in 0..n {
            let p = sigmoid(f[i]);
            grad[i] = y[i] as f64 - p;
            hess[i] = p * (1.0 - p);
        }
        let lists = round_lists(&sorted, n, params.subsample, params.seed, round);
        let tree = fit_regression_tree(
            x,
            &grad,
            &hess,
            lists.as_deref().unwrap_or(&sorted.order),
            &tree_params,
        );
        let mut loss = 0.0;
        for i in 0..n {
            f[i] += params.learning_rate * tree.predict_row(x.row(i));
            let p = sigmoid(f[i]).clamp(1e-12, 1.0 - 1e-12);
            loss -= if y[i] == 1 { p.ln() } else { (1.0 - p).ln() };
        }
        train_logloss.push(loss / n as f64);
        trees.push(tree);
    }

    Ok(GbtClassifier {
        base_log_odds,
        learning_rate: params.learning_rate,
        trees,
        n_features: x.cols(),
        train_logloss,
    })
}
