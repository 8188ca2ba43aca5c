//! Tree diffusion in the latent space of an MLP autoencoder, decoded back
//! to feature space before classification.
//!
//! cargo run --example embedforest

use latentforest::datagen::two_gaussians;
use latentforest::pipeline::{run_embedforest, Method, RunConfig};

fn main() -> latentforest::Result<()> {
    let data = two_gaussians(600, 40, 8, 2.2, 1.0, 42);

    let mut cfg = RunConfig::new(Method::EmbedForest);
    cfg.seed = 1;
    cfg.ratio = 100;
    cfg.mlp.epochs = 300;
    cfg.flow.n_t = 25;
    cfg.flow.duplicate_k = 25;
    cfg.flow.gbt.n_estimators = 20;

    let result = run_embedforest(&data, &cfg)?;
    let codec = result.models.mlp.as_ref().unwrap();
    println!(
        "autoencoder: {} -> {} -> {}",
        codec.input_dim, codec.latent_dim, codec.input_dim
    );
    println!(
        "synthetic rows: {} (feature-space width {})",
        result.synthetic.rows(),
        result.synthetic.cols()
    );
    let m = &result.metrics;
    println!(
        "recall(rf) {:.3} | recall(gbt) {:.3} | wd {:.4} | dcr {:.4} | nndr {:.4}",
        m.random_forest.recall,
        m.gbt.recall,
        m.wd.unwrap(),
        m.dcr_mean.unwrap(),
        m.nndr_mean.unwrap()
    );
    let t = m.timings.unwrap();
    println!(
        "timings: encode {:.2}s, flow fit {:.2}s, sample {:.2}s, decode {:.2}s, classify {:.2}s",
        t.encode_s, t.flow_fit_s, t.sample_s, t.decode_s, t.classify_s
    );
    Ok(())
}
