//! One-factor-at-a-time ablation of the attention pipeline: a baseline
//! configuration plus fourteen single-knob variants, reporting minority
//! recall and the best component's improvement.
//!
//! cargo run --example ablation

use latentforest::datagen::two_gaussians;
use latentforest::pipeline::{run_ablation, Method, RunConfig};

fn main() -> latentforest::Result<()> {
    let data = two_gaussians(120, 24, 4, 2.5, 1.0, 21);

    let mut cfg = RunConfig::new(Method::AttentionForest);
    cfg.seed = 6;
    cfg.ratio = 100;
    // trimmed training budget so the 15 runs finish quickly
    cfg.attn.epochs = 60;
    cfg.flow.gbt.n_estimators = 10;
    cfg.flow.gbt.max_depth = 3;
    cfg.rf.n_estimators = 20;
    cfg.gbt_classifier.n_estimators = 20;

    let result = run_ablation(&data, &cfg)?;
    println!("baseline recall(rf): {:.4}", result.baseline_recall);
    println!("{:<18} {:>8} {:>10} {:>12}", "parameter", "value", "recall", "improvement");
    for row in &result.rows {
        println!(
            "{:<18} {:>8} {:>10.4} {:>11.2}%",
            row.parameter, row.value, row.recall_rf, row.improvement_pct
        );
    }
    println!(
        "\nbest component: {} = {} ({:+.2}% over baseline)",
        result.best.parameter, result.best.value, result.best.improvement_pct
    );
    Ok(())
}
