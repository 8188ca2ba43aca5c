//! Latent-space, tree-driven diffusion for minority-class oversampling in
//! imbalanced tabular data.
//!
//! The crate couples conditional flow matching with gradient-boosted-tree
//! vector fields and runs the flow in one of three latent geometries:
//! a PCA basis, an MLP autoencoder, or a transformer autoencoder. On top
//! sit end-to-end augmentation pipelines, SMOTE and raw-space diffusion
//! baselines, ratio sweeps, an ablation runner, and utility / similarity /
//! privacy metrics.
//!
//! Start from the runnable programs in `examples/`, or from
//! [`pipeline::run`] for a single augmentation run.

pub mod attention;
pub mod cli;
pub mod data;
pub mod datagen;
pub mod error;
pub mod gbt;
pub mod matrix;
pub mod metrics;
pub mod mlp;
pub mod flow;
pub mod pca;
pub mod pipeline;
pub mod report;
pub mod smote;

pub use error::{Error, Result};
pub use matrix::Matrix;
