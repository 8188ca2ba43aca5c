//! SMOTE baseline: k-nearest-neighbor interpolation in standardized
//! space, mapped back to features.
//!
//! cargo run --example smote_baseline

use latentforest::datagen::two_gaussians;
use latentforest::pipeline::{run_smote, Method, RunConfig};

fn main() -> latentforest::Result<()> {
    let data = two_gaussians(600, 40, 6, 2.2, 1.0, 42);

    let mut cfg = RunConfig::new(Method::Smote);
    cfg.seed = 1;
    cfg.ratio = 100;
    cfg.smote_k = 5;

    let result = run_smote(&data, &cfg)?;
    let m = &result.metrics;
    println!(
        "synthetic rows {} | recall(rf) {:.3} | recall(gbt) {:.3} | f1(rf) {:.3}",
        result.synthetic.rows(),
        m.random_forest.recall,
        m.gbt.recall,
        m.random_forest.f1
    );
    println!(
        "wd {:.4} | dcr mean {:.4} | nndr mean {:.4}  (interpolation keeps synthetics close to the data)",
        m.wd.unwrap(),
        m.dcr_mean.unwrap(),
        m.nndr_mean.unwrap()
    );
    Ok(())
}
