//! Raw-space tree-diffusion baseline: no latent codec, the flow runs
//! directly on standardized minority features.
//!
//! cargo run --example forest_diffusion

use latentforest::datagen::two_gaussians;
use latentforest::pipeline::{run_forest_diffusion, Method, RunConfig};

fn main() -> latentforest::Result<()> {
    let data = two_gaussians(600, 40, 6, 2.2, 1.0, 42);

    let mut cfg = RunConfig::new(Method::ForestDiffusion);
    cfg.seed = 1;
    cfg.ratio = 100;
    cfg.flow.n_t = 25;
    cfg.flow.duplicate_k = 25;
    cfg.flow.gbt.n_estimators = 20;

    let result = run_forest_diffusion(&data, &cfg)?;
    let m = &result.metrics;
    println!(
        "synthetic rows {} | recall(rf) {:.3} | recall(gbt) {:.3}",
        result.synthetic.rows(),
        m.random_forest.recall,
        m.gbt.recall
    );
    println!(
        "wd {:.4} | dcr mean {:.4} | dcr median {:.4} | nndr mean {:.4}",
        m.wd.unwrap(),
        m.dcr_mean.unwrap(),
        m.dcr_median.unwrap(),
        m.nndr_mean.unwrap()
    );
    let t = m.timings.unwrap();
    println!("flow fit {:.2}s | classify {:.2}s | total {:.2}s", t.flow_fit_s, t.classify_s, t.total_s);
    Ok(())
}
