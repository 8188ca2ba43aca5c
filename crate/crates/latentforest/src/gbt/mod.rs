//! Tree-ensemble learners: regression trees, gradient-boosted regression
//! (the vector-field approximator) and the two downstream classifiers.

mod boost;
mod forest;
mod tree;

pub use boost::{
    fit_gbt_classifier, fit_gbt_regressor, predict_gbt, GbtClassifier, GbtClassifierParams,
    GbtParams, GbtRegressor,
};
pub use forest::{fit_random_forest, ForestParams, RandomForestClassifier};
pub use tree::{Node, SortedFeatures};
