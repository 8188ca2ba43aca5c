//! PCA-embedded tree diffusion on an imbalanced two-Gaussian dataset.
//!
//! Everything after the embedding happens in latent space: the flow, the
//! augmented classifiers and the similarity/privacy metrics.
//!
//! cargo run --example pcaforest

use latentforest::datagen::low_rank_imbalanced;
use latentforest::pipeline::{run_pcaforest, Method, RunConfig};

fn main() -> latentforest::Result<()> {
    // 12 correlated features driven by 4 factors: the 0.95 variance cut
    // collapses most of the width before the flow ever runs
    let data = low_rank_imbalanced(600, 40, 12, 4, 0.15, 42);
    println!(
        "dataset: {} rows, {} features, class counts {:?}",
        data.n_rows(),
        data.width(),
        data.class_counts()
    );

    let mut cfg = RunConfig::new(Method::PcaForest);
    cfg.seed = 1;
    cfg.ratio = 100;
    // trimmed for a quick demo; defaults are n_t 50, duplicate_k 100
    cfg.flow.n_t = 25;
    cfg.flow.duplicate_k = 25;
    cfg.flow.gbt.n_estimators = 20;

    let result = run_pcaforest(&data, &cfg)?;
    let pca = result.models.pca.as_ref().unwrap();
    println!(
        "retained {} of {} dimensions ({:.1}% variance)",
        pca.d,
        data.width(),
        pca.explained_ratio * 100.0
    );
    println!(
        "generated {} latent rows for minority label {}",
        result.synthetic_count, result.minority_label
    );
    let m = &result.metrics;
    println!(
        "recall(rf) {:.3} | recall(gbt) {:.3} | f1(rf) {:.3} | space {}",
        m.random_forest.recall, m.gbt.recall, m.random_forest.f1, m.metric_space
    );
    println!(
        "wd {:.4} | dcr mean {:.4} | nndr mean {:.4}",
        m.wd.unwrap(),
        m.dcr_mean.unwrap(),
        m.nndr_mean.unwrap()
    );
    Ok(())
}
