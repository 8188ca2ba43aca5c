//! Random forest over gini trees: bootstrap rows, sqrt feature sampling
//! per node, majority vote; probability is the vote fraction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::tree::{fit_classification_tree, ClsTreeParams, Node, SortedFeatures};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    /// None means unrestricted growth (capped at depth 64 to bound the
    /// recursion; gini trees never approach that at sane row counts).
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RandomForestClassifier {
    pub trees: Vec<Node>,
    pub n_features: usize,
}

impl RandomForestClassifier {
    /// Fraction of trees voting label 1, per row.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.n_features),
                found: format!("{}", x.cols()),
            });
        }
        let n_trees = self.trees.len().max(1) as f64;
        Ok(x.iter_rows()
            .map(|row| {
                let votes: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                votes / n_trees
            })
            .collect())
    }

    /// Majority vote; exact ties go to label 0.
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

pub fn fit_random_forest(
    x: &Matrix,
    y: &[u8],
    params: &ForestParams,
) -> Result<RandomForestClassifier> {
    if x.rows() == 0 || x.rows() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", x.rows()),
            found: format!("{}", y.len()),
        });
    }
    x.require_finite("forest training features")?;
    let ones = y.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::SingleClass);
    }

    let n = x.rows();
    let sorted = SortedFeatures::new(x);
    let max_features = ((x.cols() as f64).sqrt().floor() as usize).max(1);
    let tree_params = ClsTreeParams {
        max_depth: params.max_depth.unwrap_or(64),
        min_samples_split: params.min_samples_split,
        min_samples_leaf: params.min_samples_leaf,
        max_features,
    };

    // One independent rng stream per tree keeps the fit deterministic
    // regardless of how rayon schedules the work.
    let trees: Vec<Node> = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64 + 1);
            if params.bootstrap {
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                let lists = sorted.restrict(&counts);
                fit_classification_tree(x, y, &lists, &tree_params, &mut rng)
            } else {
                fit_classification_tree(x, y, &sorted.order, &tree_params, &mut rng)
            }
        })
        .collect();

    Ok(RandomForestClassifier {
        trees,
        n_features: x.cols(),
    })
}
